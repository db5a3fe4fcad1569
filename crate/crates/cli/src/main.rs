use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use dirac_qes::exact::{
    coulomb_spectrum, extended_oscillator_spectrum, oscillator_spectrum, ExactError, ExactSpectrumResult,
};
use dirac_qes::model::{preset, ModelError, PhysicalParams, Preset, ProblemInstance};
use dirac_qes::odeoracle::{confirm, OracleError, ShootingConfig};
use dirac_qes::qes::{
    assign_branches, extended_build, extended_solve, planar_build, planar_n0_closed_form, planar_solve,
    BranchSelection, PlanarSystem, QesError, QesSolution,
};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "dirac-qes", version, about = "Exact and quasi-exact spectra of radial Dirac equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exactly solvable spectrum with oracle confirmation.
    Spectrum {
        preset: Preset,
        #[command(flatten)]
        params: Params,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Scan of the quantized coupling over a parameter sweep.
    QesScan {
        preset: Preset,
        #[command(flatten)]
        params: Params,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// param:start:stop:points
        #[arg(long)]
        sweep: Sweep,
        /// Grid points of the coupling scan at each sweep value.
        #[arg(long)]
        grid: Option<usize>,
        /// lo:hi range searched for gamma0 in the extended case.
        #[arg(long, default_value = "-200:200", allow_hyphen_values = true)]
        gamma0_range: Range,
        #[command(flatten)]
        out: Output,
    },
    /// Oracle confirmation of supplied or algebraic energies.
    Verify {
        preset: Option<Preset>,
        #[command(flatten)]
        params: Params,
        /// JSON problem instance used instead of a preset.
        #[arg(long, conflicts_with = "preset")]
        instance: Option<PathBuf>,
        /// Comma-separated energies.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        epsilon: Vec<f64>,
        #[arg(long)]
        from_algebra: bool,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Problem instance of a preset as JSON.
    PresetDump {
        preset: Preset,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default, Clone, Copy)]
struct Params {
    #[arg(long = "M", allow_hyphen_values = true)]
    mass: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_n: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    btilde: Option<f64>,
}

impl Params {
    fn map(&self) -> BTreeMap<String, f64> {
        [
            ("M", self.mass),
            ("kappa", self.kappa),
            ("mu_n", self.mu_n),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("beta1", self.beta1),
            ("gamma0", self.gamma0),
            ("gamma1", self.gamma1),
            ("btilde", self.btilde),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
    }

    fn get(&self, name: &str) -> Result<f64, CliError> {
        self.map()
            .get(name)
            .copied()
            .ok_or_else(|| CliError::Usage(format!("missing --{name}")))
    }

    fn set(&mut self, name: &str, v: f64) {
        let slot = match name {
            "M" => &mut self.mass,
            "kappa" => &mut self.kappa,
            "mu_n" => &mut self.mu_n,
            "alpha" => &mut self.alpha,
            "beta" => &mut self.beta,
            "beta1" => &mut self.beta1,
            "gamma0" => &mut self.gamma0,
            "gamma1" => &mut self.gamma1,
            _ => &mut self.btilde,
        };
        *slot = Some(v);
    }
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Debug)]
struct Sweep {
    param: String,
    start: f64,
    stop: f64,
    points: usize,
}

impl FromStr for Sweep {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [param, a, b, n] = parts[..] else {
            return Err("expected param:start:stop:points".into());
        };
        let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let sweep = Sweep {
            param: param.to_string(),
            start: num(a)?,
            stop: num(b)?,
            points: n.parse().map_err(|e| format!("`{n}`: {e}"))?,
        };
        if !(sweep.start.is_finite() && sweep.stop.is_finite()) || sweep.start >= sweep.stop {
            return Err("sweep needs finite start < stop".into());
        }
        if sweep.points < 2 {
            return Err("sweep needs at least two points".into());
        }
        Ok(sweep)
    }
}

impl Sweep {
    fn values(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + h * i as f64).collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct Range(f64, f64);

impl FromStr for Range {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
        let lo: f64 = a.parse().map_err(|e| format!("`{a}`: {e}"))?;
        let hi: f64 = b.parse().map_err(|e| format!("`{b}`: {e}"))?;
        if lo < hi {
            Ok(Range(lo, hi))
        } else {
            Err("expected lo < hi".into())
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Verify(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Verify(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::Model(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<QesError> for CliError {
    fn from(e: QesError) -> Self {
        match e {
            QesError::Validation(_) | QesError::Model(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Config(_) | OracleError::Model(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn emit(out: &Output, csv: String, json: serde_json::Value) -> Result<(), CliError> {
    let text = if out.json {
        let mut s = serde_json::to_string_pretty(&json).map_err(|e| CliError::Numerical(e.to_string()))?;
        s.push('\n');
        s
    } else {
        csv
    };
    match &out.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SpectrumRow {
    n: usize,
    eps_plus: f64,
    eps_minus: Option<f64>,
    epsilon: f64,
    residual: f64,
    oracle_eps: Option<f64>,
    abs_delta: Option<f64>,
}

fn exact_spectrum(preset_name: Preset, params: &Params, n_max: usize) -> Result<ExactSpectrumResult, CliError> {
    if matches!(preset_name, Preset::PlanarCoulombMagnetic | Preset::ExtendedOscillatorQES) {
        return Err(CliError::Usage(format!(
            "`{preset_name}` has no exact spectrum; use qes-scan or verify --from-algebra"
        )));
    }
    preset(preset_name, &params.map())?;
    Ok(match preset_name {
        Preset::DiracOscillator => oscillator_spectrum(
            &PhysicalParams::new(params.get("M")?, params.get("kappa")?, params.get("mu_n")?)?,
            n_max,
        )?,
        Preset::ExtendedOscillatorES => {
            extended_oscillator_spectrum(
                params.get("M")?,
                params.get("kappa")?,
                params.get("beta1")?,
                params.get("gamma1")?,
                n_max,
            )?
            .spectrum
        }
        Preset::DiracCoulomb => coulomb_spectrum(
            &PhysicalParams::new(params.get("M")?, params.get("kappa")?, 0.0)?,
            params.get("alpha")?,
            params.get("beta")?,
            n_max,
        )?,
        _ => unreachable!(),
    })
}

fn cmd_spectrum(preset_name: Preset, params: &Params, n_max: usize, out: &Output) -> Result<(), CliError> {
    let res = exact_spectrum(preset_name, params, n_max)?;
    let cfg = ShootingConfig::default();
    let mut rows = Vec::new();
    for level in &res.levels {
        for s in &level.states {
            let oracle = match confirm(&res.instance, s.epsilon, &cfg) {
                Ok(hit) => Some(hit.epsilon),
                Err(e) => {
                    eprintln!("warning: oracle at n = {}, eps = {}: {e}", level.n, s.epsilon);
                    None
                }
            };
            rows.push(SpectrumRow {
                n: level.n,
                eps_plus: level.epsilon_plus,
                eps_minus: level.epsilon_minus,
                epsilon: s.epsilon,
                residual: s.residual,
                oracle_eps: oracle,
                abs_delta: oracle.map(|o| (o - s.epsilon).abs()),
            });
        }
    }
    let mut csv = String::from("n,eps_plus,eps_minus,epsilon,residual,oracle_eps,abs_delta\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.n,
            num(r.eps_plus),
            opt(r.eps_minus),
            num(r.epsilon),
            num(r.residual),
            opt(r.oracle_eps),
            opt(r.abs_delta)
        );
    }
    emit(out, csv, serde_json::json!(rows))
}

#[derive(Serialize)]
struct ScanRow {
    sweep_value: f64,
    branch_id: usize,
    fixed_coupling: f64,
    epsilon: f64,
    sigma_min: f64,
}

fn scan_point(
    preset_name: Preset,
    params: &Params,
    n: usize,
    grid: Option<usize>,
    gamma0: Range,
) -> Result<Vec<QesSolution>, CliError> {
    match preset_name {
        Preset::PlanarCoulombMagnetic => {
            let kappa = params.get("kappa")?;
            let sys = planar_build(n, kappa, params.get("M")?)?;
            Ok(planar_solve(&sys, (-kappa.abs(), kappa.abs()), grid.unwrap_or(2001))?)
        }
        Preset::ExtendedOscillatorQES => {
            let sys = extended_build(
                n,
                params.get("kappa")?,
                params.get("M")?,
                params.get("alpha")?,
                params.get("beta1")?,
                params.get("gamma1")?,
            )?;
            Ok(extended_solve(
                &sys,
                (gamma0.0, gamma0.1),
                grid.unwrap_or(20001),
                BranchSelection::Both,
            )?)
        }
        other => Err(CliError::Usage(format!(
            "`{other}` has no quantized coupling; use planar or extended-qes"
        ))),
    }
}

fn cmd_qes_scan(
    preset_name: Preset,
    params: &Params,
    n: usize,
    sweep: &Sweep,
    grid: Option<usize>,
    gamma0: Range,
    out: &Output,
) -> Result<(), CliError> {
    let allowed: &[&str] = match preset_name {
        Preset::PlanarCoulombMagnetic => &["M"],
        _ => &["M", "alpha"],
    };
    if !allowed.contains(&sweep.param.as_str()) {
        return Err(CliError::Usage(format!(
            "cannot sweep `{}` for {preset_name}; allowed: {allowed:?}",
            sweep.param
        )));
    }
    let values = sweep.values();
    let mut points: Vec<Vec<QesSolution>> = values
        .par_iter()
        .map(|&v| {
            let mut p = Params { ..*params };
            p.set(&sweep.param, v);
            scan_point(preset_name, &p, n, grid, gamma0)
        })
        .collect::<Result<_, _>>()?;
    assign_branches(&mut points);
    let mut rows = Vec::new();
    for (v, sols) in values.iter().zip(&points) {
        let mut sols: Vec<&QesSolution> = sols.iter().collect();
        sols.sort_by_key(|s| s.branch_id);
        for s in sols {
            rows.push(ScanRow {
                sweep_value: *v,
                branch_id: s.branch_id,
                fixed_coupling: s.fixed_coupling,
                epsilon: s.epsilon,
                sigma_min: s.sigma_min,
            });
        }
    }
    if rows.is_empty() {
        eprintln!("warning: no roots found over the sweep");
    }
    let mut csv = String::from("sweep_value,branch_id,fixed_coupling,epsilon,sigma_min\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            num(r.sweep_value),
            r.branch_id,
            num(r.fixed_coupling),
            num(r.epsilon),
            num(r.sigma_min)
        );
    }
    emit(out, csv, serde_json::json!(rows))
}

#[derive(Serialize)]
struct VerifyRow {
    eps_algebraic: f64,
    eps_oracle: Option<f64>,
    abs_delta: Option<f64>,
    nodes: Option<usize>,
    normalizable: Option<bool>,
    pass: bool,
}

/// (instance, energy) pairs produced by the algebraic solvers.
fn algebraic_cases(
    preset_name: Preset,
    params: &Params,
    n: Option<usize>,
    n_max: usize,
) -> Result<Vec<(ProblemInstance, f64)>, CliError> {
    match preset_name {
        Preset::PlanarCoulombMagnetic => {
            let (kappa, mass) = (params.get("kappa")?, params.get("M")?);
            let field = params.btilde.unwrap_or(1.0);
            let n = n.unwrap_or(0);
            let sys = planar_build(n, kappa, mass)?;
            let sols: Vec<QesSolution> = if n == 0 {
                planar_n0_closed_form(kappa, mass)?
                    .into_iter()
                    .filter_map(Result::ok)
                    .collect()
            } else {
                planar_solve(&sys, (-kappa.abs(), kappa.abs()), 2001)?
            };
            sols.iter()
                .map(|s| {
                    Ok((
                        sys.instance(s.fixed_coupling, field)?,
                        PlanarSystem::physical_energy(s.epsilon, field),
                    ))
                })
                .collect()
        }
        Preset::ExtendedOscillatorQES => {
            let sys = extended_build(
                n.unwrap_or(1),
                params.get("kappa")?,
                params.get("M")?,
                params.get("alpha")?,
                params.get("beta1")?,
                params.get("gamma1")?,
            )?;
            extended_solve(&sys, (-200.0, 200.0), 20001, BranchSelection::Both)?
                .iter()
                .map(|s| Ok((sys.instance(s.fixed_coupling)?, s.epsilon)))
                .collect()
        }
        _ => {
            let res = exact_spectrum(preset_name, params, n.unwrap_or(n_max))?;
            Ok(res
                .levels
                .iter()
                .filter(|l| n.is_none_or(|n| l.n == n))
                .flat_map(|l| l.states.iter().map(|s| (res.instance.clone(), s.epsilon)))
                .collect())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    preset_name: Option<Preset>,
    params: &Params,
    instance: Option<&PathBuf>,
    energies: &[f64],
    from_algebra: bool,
    n: Option<usize>,
    n_max: usize,
    tol: f64,
    out: &Output,
) -> Result<(), CliError> {
    let cases: Vec<(ProblemInstance, f64)> = if from_algebra {
        let p = preset_name.ok_or_else(|| CliError::Usage("--from-algebra needs a preset".into()))?;
        algebraic_cases(p, params, n, n_max)?
    } else {
        if energies.is_empty() {
            return Err(CliError::Usage("supply --epsilon or --from-algebra".into()));
        }
        let inst = match (instance, preset_name) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                ProblemInstance::from_json(&text)?
            }
            (None, Some(p)) => preset(p, &params.map())?,
            (None, None) => return Err(CliError::Usage("supply a preset or --instance".into())),
        };
        energies.iter().map(|&e| (inst.clone(), e)).collect()
    };
    if cases.is_empty() {
        return Err(CliError::Numerical("no algebraic energies to verify".into()));
    }
    let cfg = ShootingConfig::default();
    let rows: Vec<VerifyRow> = cases
        .par_iter()
        .map(|(inst, e)| match confirm(inst, *e, &cfg) {
            Ok(hit) => {
                let d = (hit.epsilon - e).abs();
                VerifyRow {
                    eps_algebraic: *e,
                    eps_oracle: Some(hit.epsilon),
                    abs_delta: Some(d),
                    nodes: Some(hit.node_count),
                    normalizable: Some(hit.normalizable),
                    pass: d < tol,
                }
            }
            Err(err) => {
                eprintln!("oracle at eps = {e}: {err}");
                VerifyRow {
                    eps_algebraic: *e,
                    eps_oracle: None,
                    abs_delta: None,
                    nodes: None,
                    normalizable: None,
                    pass: false,
                }
            }
        })
        .collect();
    let mut csv = String::from("eps_algebraic,eps_oracle,abs_delta,nodes,normalizable,status\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(r.eps_algebraic),
            opt(r.eps_oracle),
            opt(r.abs_delta),
            r.nodes.map(|n| n.to_string()).unwrap_or_default(),
            r.normalizable.map(|b| b.to_string()).unwrap_or_default(),
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    emit(out, csv, serde_json::json!(rows))?;
    let failed: Vec<f64> = rows.iter().filter(|r| !r.pass).map(|r| r.eps_algebraic).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(format!("oracle disagrees at eps = {failed:?}")))
    }
}

fn cmd_preset_dump(preset_name: Preset, params: &Params, out: Option<&PathBuf>) -> Result<(), CliError> {
    let mut json = preset(preset_name, &params.map())?.to_json()?;
    json.push('\n');
    match out {
        Some(path) => {
            std::fs::write(path, json).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum {
            preset,
            params,
            n_max,
            out,
        } => cmd_spectrum(preset, &params, n_max, &out),
        Command::QesScan {
            preset,
            params,
            n,
            sweep,
            grid,
            gamma0_range,
            out,
        } => cmd_qes_scan(preset, &params, n, &sweep, grid, gamma0_range, &out),
        Command::Verify {
            preset,
            params,
            instance,
            epsilon,
            from_algebra,
            n,
            n_max,
            tol,
            out,
        } => cmd_verify(
            preset,
            &params,
            instance.as_ref(),
            &epsilon,
            from_algebra,
            n,
            n_max,
            tol,
            &out,
        ),
        Command::PresetDump { preset, params, out } => cmd_preset_dump(preset, &params, out.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) | CliError::Verify(m) | CliError::Numerical(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(e.code())
        }
    }
}
