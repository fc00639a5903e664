//! Re-checks the acceptance predicates of a finished run from its files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentKind;
use super::run::Manifest;
use super::table::CsvData;
use crate::error::{Error, Result};
use crate::fleming_viot::lemma_lower_bound;
use crate::qsd::QsdParams;
use crate::sampler::InitialLaw;

pub const REPORT: &str = "verify.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub experiment: Option<ExperimentKind>,
    pub passed: bool,
    pub missing: Vec<String>,
    pub predicates: Vec<Predicate>,
}

impl VerifyReport {
    fn missing(experiment: Option<ExperimentKind>, missing: Vec<String>) -> Self {
        Self {
            experiment,
            passed: false,
            predicates: vec![Predicate {
                name: "output files present".into(),
                passed: false,
                detail: format!("missing: {}", missing.join(", ")),
            }],
            missing,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(REPORT), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Predicate> {
        self.predicates.iter().filter(|p| !p.passed)
    }
}

struct Checks(Vec<Predicate>);

impl Checks {
    fn add(&mut self, name: &str, passed: bool, detail: String) {
        self.0.push(Predicate {
            name: name.into(),
            passed,
            detail,
        });
    }
}

/// Verifies the run in `dir` and writes `verify.json` there.
pub fn verify(dir: &Path) -> Result<VerifyReport> {
    let report = evaluate(dir)?;
    report.write(dir)?;
    Ok(report)
}

/// Evaluates the predicates without writing anything.
pub fn evaluate(dir: &Path) -> Result<VerifyReport> {
    let manifest_path = dir.join(Manifest::file_name());
    if !manifest_path.is_file() {
        return Ok(VerifyReport::missing(None, vec![Manifest::file_name().into()]));
    }
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)
        .map_err(|e| Error::Malformed {
            file: Manifest::file_name().into(),
            message: e.to_string(),
        })?;
    let kind = manifest.experiment;
    let missing: Vec<String> = manifest
        .outputs
        .iter()
        .filter(|o| !dir.join(&o.file).is_file())
        .map(|o| o.file.clone())
        .collect();
    if !missing.is_empty() {
        return Ok(VerifyReport::missing(Some(kind), missing));
    }
    let mut data = BTreeMap::new();
    let mut checks = Checks(Vec::new());
    for o in &manifest.outputs {
        let csv = CsvData::read(&dir.join(&o.file))?;
        let header_ok = o.columns.iter().all(|c| csv.text(c).is_ok());
        checks.add(
            &format!("{} has the declared columns", o.file),
            header_ok && !csv.is_empty(),
            format!("{} rows", csv.len()),
        );
        data.insert(o.file.clone(), csv);
    }
    if checks.0.iter().all(|p| p.passed) {
        let get = |f: &str| {
            data.get(f).ok_or_else(|| Error::Malformed {
                file: f.into(),
                message: "not listed in the manifest".into(),
            })
        };
        match kind {
            ExperimentKind::QsdTable => qsd_table(get("qsd_table.csv")?, &mut checks)?,
            ExperimentKind::ValidateKernel => kernel(get("kernel_validation.csv")?, &mut checks)?,
            ExperimentKind::Survival => survival(get("survival.csv")?, &mut checks)?,
            ExperimentKind::Yaglom => yaglom(get("yaglom.csv")?, &manifest.config.initial, &mut checks)?,
            ExperimentKind::FvStationary => fv(get("fv_stationary.csv")?, false, &mut checks)?,
            ExperimentKind::FvSweep => fv(get("fv_sweep.csv")?, true, &mut checks)?,
            ExperimentKind::GreenCheck => green(get("green_check.csv")?, &mut checks)?,
            ExperimentKind::NbbmSpeed => nbbm_speed(get("nbbm_speed_summary.csv")?, &mut checks)?,
            ExperimentKind::NbbmProfile => nbbm_profile(get("nbbm_profile.csv")?, &mut checks)?,
        }
    }
    let passed = checks.0.iter().all(|p| p.passed);
    Ok(VerifyReport {
        experiment: Some(kind),
        passed,
        missing: Vec::new(),
        predicates: checks.0,
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn qsd_table(csv: &CsvData, checks: &mut Checks) -> Result<()> {
    let cols = ["lambda", "beta", "M_lambda", "mean", "tail_rate"];
    let values = cols.iter().map(|c| csv.floats(c)).collect::<Result<Vec<_>>>()?;
    let mut bad = Vec::new();
    for i in 0..csv.len() {
        let l = values[0][i];
        let ok = match QsdParams::<f64>::new(l) {
            Ok(q) => [q.beta(), q.norm_const(), q.mean(), q.tail_rate()]
                .iter()
                .zip(&values[1..])
                .all(|(exact, col)| close(col[i], *exact)),
            Err(_) => false,
        };
        if !ok {
            bad.push(l.to_string());
        }
    }
    checks.add("QSD table matches closed forms", bad.is_empty(), format!("bad lambdas: {bad:?}"));
    Ok(())
}

fn kernel(csv: &CsvData, checks: &mut Checks) -> Result<()> {
    let q = csv.text("quantity")?;
    let est = csv.floats("estimate")?;
    let se = csv.floats("std_error")?;
    let reference = csv.floats("reference")?;
    let rows = |name: &str| (0..csv.len()).filter(|&i| q[i] == name).collect::<Vec<_>>();
    for (name, label) in [
        ("survival_corrected", "stepped survival within 3 SE of the closed form"),
        ("hitting_mean", "hitting-time mean within 3 SE"),
        ("hitting_variance", "hitting-time variance within 3 SE"),
        ("hitting_laplace", "hitting-time Laplace transform within 3 SE"),
    ] {
        let r = rows(name);
        let zs: Vec<f64> = r.iter().map(|&i| (est[i] - reference[i]) / se[i]).collect();
        checks.add(
            label,
            !r.is_empty() && zs.iter().all(|z| z.abs() <= 3.0),
            format!("z = {zs:?}"),
        );
    }
    let r = rows("survival_uncorrected");
    let zs: Vec<f64> = r.iter().map(|&i| (est[i] - reference[i]) / se[i]).collect();
    checks.add(
        "uncorrected scheme overestimates survival by more than 3 SE",
        !r.is_empty() && zs.iter().all(|&z| z > 3.0),
        format!("z = {zs:?}"),
    );
    Ok(())
}

fn survival(csv: &CsvData, checks: &mut Checks) -> Result<()> {
    let (rate, se, exact) = (csv.floats("rate_hat")?, csv.floats("rate_se")?, csv.floats("rate_exact")?);
    let zs: Vec<f64> = (0..csv.len()).map(|i| (rate[i] - exact[i]) / se[i]).collect();
    checks.add(
        "decay rate within 3 SE of the exact value",
        zs.iter().all(|z| z.abs() <= 3.0),
        format!("z = {zs:?}"),
    );
    Ok(())
}

/// Row indices grouped by replica, in file order.
fn by_replica(csv: &CsvData) -> Result<BTreeMap<usize, Vec<usize>>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in csv.ints("replica")?.into_iter().enumerate() {
        groups.entry(r).or_default().push(i);
    }
    Ok(groups)
}

fn yaglom(csv: &CsvData, initial: &InitialLaw, checks: &mut Checks) -> Result<()> {
    let w1 = csv.floats("w1_pimin")?;
    let w1_ref = csv.floats("w1_initial_qsd")?;
    let degenerate = csv.text("degenerate")?;
    checks.add(
        "no degenerate ensembles",
        degenerate.iter().all(|d| d == "false"),
        format!("{degenerate:?}"),
    );
    for (r, rows) in by_replica(csv)? {
        let series: Vec<f64> = rows.iter().map(|&i| w1[i]).collect();
        match initial {
            InitialLaw::Qsd(l) if *l < 0.5 => {
                let refs: Vec<f64> = rows.iter().map(|&i| w1_ref[i]).collect();
                checks.add(
                    &format!("replica {r}: W1 to the initial QSD stays below 0.02"),
                    refs.iter().all(|&d| d < 0.02),
                    format!("{refs:?}"),
                );
                checks.add(
                    &format!("replica {r}: W1 to pi_min stays above 0.1"),
                    series.iter().all(|&d| d > 0.1),
                    format!("{series:?}"),
                );
            }
            InitialLaw::Qsd(_) => checks.add(
                &format!("replica {r}: W1 to pi_min stays below 0.02"),
                series.iter().all(|&d| d < 0.02),
                format!("{series:?}"),
            ),
            _ => {
                checks.add(
                    &format!("replica {r}: W1 to pi_min strictly decreasing in t"),
                    series.windows(2).all(|w| w[1] < w[0]),
                    format!("{series:?}"),
                );
                let last = *series.last().unwrap_or(&f64::NAN);
                checks.add(
                    &format!("replica {r}: W1 to pi_min below 0.05 at the last time"),
                    last < 0.05,
                    format!("{last}"),
                );
            }
        }
    }
    Ok(())
}

/// Predicates shared by all Fleming-Viot outputs, plus the selection trend
/// across particle counts when `sweep` is set.
fn fv(csv: &CsvData, sweep: bool, checks: &mut Checks) -> Result<()> {
    let n = csv.ints("N")?;
    let dt = csv.floats("dt")?;
    let lambda = csv.floats("lambda_hat")?;
    let se = csv.floats("lambda_se")?;
    let bound_z: Vec<f64> = (0..csv.len())
        .map(|i| (lambda[i] - lemma_lower_bound(n[i])) / se[i])
        .collect();
    checks.add(
        "rate at least 0.5/iota_N - 3 SE",
        bound_z.iter().all(|&z| z >= -3.0),
        format!("z = {bound_z:?}"),
    );
    let (a, sa) = (csv.floats("lambda_first_half")?, csv.floats("lambda_first_half_se")?);
    let (b, sb) = (csv.floats("lambda_second_half")?, csv.floats("lambda_second_half_se")?);
    let split: Vec<f64> = (0..csv.len())
        .map(|i| (a[i] - b[i]) / (sa[i] * sa[i] + sb[i] * sb[i]).sqrt())
        .collect();
    checks.add(
        "split-half rates agree within 3 SE",
        split.iter().all(|z| z.abs() <= 3.0),
        format!("z = {split:?}"),
    );
    let at_100: Vec<usize> = (0..csv.len()).filter(|&i| n[i] == 100).collect();
    if !at_100.is_empty() {
        for (est, err, label) in [
            ("interjump_identity", "interjump_identity_se", "rate * N * mean interjump time = 1 within 3 SE"),
            ("varpi_identity", "varpi_identity_se", "rate * mean(varpi) = 1 within 3 SE"),
        ] {
            let (e, s) = (csv.floats(est)?, csv.floats(err)?);
            let zs: Vec<f64> = at_100.iter().map(|&i| (e[i] - 1.0) / s[i]).collect();
            checks.add(&format!("N=100: {label}"), zs.iter().all(|z| z.abs() <= 3.0), format!("z = {zs:?}"));
        }
        let g = csv.floats("green_exp_z")?;
        let zs: Vec<f64> = at_100.iter().map(|&i| g[i]).collect();
        checks.add(
            "N=100: Green identity for exp(-x) has |z| <= 3",
            zs.iter().all(|z| z.abs() <= 3.0),
            format!("z = {zs:?}"),
        );
    }
    if !sweep {
        return Ok(());
    }
    let w1 = csv.floats("w1_pimin")?;
    let w1_se = csv.floats("w1_pimin_se")?;
    let dt0 = dt.first().copied().unwrap_or(f64::NAN);
    for (r, rows) in by_replica(csv)? {
        let mut rows: Vec<usize> = rows.into_iter().filter(|&i| dt[i] == dt0).collect();
        rows.sort_by_key(|&i| n[i]);
        if rows.len() < 2 {
            continue;
        }
        let gaps: Vec<f64> = rows
            .windows(2)
            .map(|w| {
                let (i, j) = (w[0], w[1]);
                let combined = (se[i] * se[i] + se[j] * se[j]).sqrt();
                ((lambda[j] - 0.5).abs() - (lambda[i] - 0.5).abs()) / combined
            })
            .collect();
        checks.add(
            &format!("replica {r}: rate moves toward 1/2 as N grows, within 3 SE"),
            gaps.iter().all(|&g| g <= 3.0),
            format!("distance increase in SE units: {gaps:?}"),
        );
        let last = *rows.last().expect("two rows");
        checks.add(
            &format!("replica {r}: |rate - 1/2| < 0.05 at N={}", n[last]),
            (lambda[last] - 0.5).abs() < 0.05,
            format!("rate {}", lambda[last]),
        );
        let series: Vec<f64> = rows.iter().map(|&i| w1[i]).collect();
        let rises = increments_in_se(&rows, &w1, &w1_se);
        checks.add(
            &format!("replica {r}: W1(xi, pi_min) decreasing in N within 3 SE"),
            rises.iter().all(|&z| z <= 3.0),
            format!("{series:?}, increase in SE units {rises:?}"),
        );
        checks.add(
            &format!("replica {r}: W1(xi, pi_min) < 0.1 at N={}", n[last]),
            w1[last] < 0.1,
            format!("{}", w1[last]),
        );
    }
    Ok(())
}

/// Successive differences of `values` along `order`, in units of their
/// combined standard error.
fn increments_in_se(order: &[usize], values: &[f64], se: &[f64]) -> Vec<f64> {
    order
        .windows(2)
        .map(|w| {
            let (i, j) = (w[0], w[1]);
            (values[j] - values[i]) / (se[i] * se[i] + se[j] * se[j]).sqrt()
        })
        .collect()
}

fn green(csv: &CsvData, checks: &mut Checks) -> Result<()> {
    let ids = csv.text("identity")?;
    let n = csv.ints("N")?;
    let z = csv.floats("z_score")?;
    let bad: Vec<String> = (0..csv.len())
        .filter(|&i| !(z[i].abs() <= 3.0))
        .map(|i| format!("N={} {}: z={}", n[i], ids[i], z[i]))
        .collect();
    checks.add("every identity has |z| <= 3", bad.is_empty(), format!("{bad:?}"));
    Ok(())
}

fn nbbm_speed(csv: &CsvData, checks: &mut Checks) -> Result<()> {
    let n = csv.ints("N")?;
    let v = csv.floats("speed")?;
    let se = csv.floats("speed_se")?;
    let mut order: Vec<usize> = (0..csv.len()).collect();
    order.sort_by_key(|&i| n[i]);
    let series: Vec<f64> = order.iter().map(|&i| v[i]).collect();
    let drops: Vec<f64> = increments_in_se(&order, &v, &se).iter().map(|z| -z).collect();
    checks.add(
        "front speed increasing in N within 3 SE",
        drops.iter().all(|&z| z <= 3.0),
        format!("{series:?}, decrease in SE units {drops:?}"),
    );
    let c = std::f64::consts::SQRT_2;
    checks.add(
        "front speed below sqrt 2 + 3 SE",
        order.iter().all(|&i| v[i] < c + 3.0 * se[i]),
        format!("{series:?}"),
    );
    let last = *order.last().expect("non-empty table");
    checks.add(
        &format!("front speed above 1 at N={}", n[last]),
        v[last] > 1.0,
        format!("{}", v[last]),
    );
    Ok(())
}

fn nbbm_profile(csv: &CsvData, checks: &mut Checks) -> Result<()> {
    let n = csv.ints("N")?;
    let w1 = csv.floats("w1_wave")?;
    let top = n.iter().copied().max().unwrap_or(0);
    let worst = (0..csv.len())
        .filter(|&i| n[i] == top)
        .map(|i| w1[i])
        .fold(f64::NEG_INFINITY, f64::max);
    checks.add(
        &format!("centered profile W1 to the minimal wave < 0.15 at N={top}"),
        worst < 0.15,
        format!("{worst}"),
    );
    Ok(())
}
