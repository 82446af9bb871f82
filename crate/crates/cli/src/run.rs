//! One runner per subcommand. Each validates its document, computes, writes
//! `<kind>.csv` (plus `<kind>.plot.dat` for ratio reports) and returns the
//! verdict.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lklab_core::besov::{dirichlet_predicted, DirichletNorms};
use lklab_core::bounds::{
    lemma1_report, lemma2_report, theorem1_lower_experiment, theorem1_upper_experiment, Criterion,
    DEFAULT_TAIL_TOL,
};
use lklab_core::norms::{aniso_lk_norm, lp_norm_reference};
use lklab_core::spectral::{cross_blocks, shell_kappa, shell_y, write_blocks_csv};
use lklab_core::svfun::{check_sv_class, check_svl_class, dyadic_log_grid, CERTIFY_EPSILONS, CERTIFY_LOG2_MAX};
use lklab_core::{
    BesovParams, BlockIndex, CatalogFunction, CrossSpec, LemmaParams, MemberRecipe, RatioReport, Sampling,
    SpaceParams, SvFunction, TheoremParams,
};

use crate::config::{parse_window, Config, Value};
use crate::output::write_report;
use crate::{CliError, Command};

/// Global overrides taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: PathBuf,
    pub window: Option<(u32, u32)>,
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    /// One-line verdict printed by the binary.
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

const NORM_TOL: f64 = 1e-4;
const LEMMA1_SPREAD: f64 = 10.0;
const LEMMA2_SPREAD: f64 = 10.0;
const BLOCK_SPREAD: f64 = 8.0;
const LOWER_SPREAD: f64 = 4.0;
/// Regression bound on upper-experiment ratios, frozen after measurement.
pub const UPPER_K: f64 = 2.0;

pub fn run(command: Command, mut config: Config, opts: &Options) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(&opts.out)?;
    if let Some((a, b)) = opts.window {
        config.set("window", Value::Scalar(format!("{a}:{b}")));
    }
    if let Some(g) = opts.grid {
        config.set("grid", Value::Scalar(g.to_string()));
    }
    match command {
        Command::Norm => run_norm(&config, &opts.out),
        Command::Cross => run_cross(&config, &opts.out),
        Command::BlockNorm => run_block_norm(&config, &opts.out),
        Command::Lemma1 => run_lemma1(&config, &opts.out),
        Command::Lemma2 => run_lemma2(&config, &opts.out),
        Command::Theorem1Lower => run_theorem(&config, &opts.out, false),
        Command::Theorem1Upper => run_theorem(&config, &opts.out, true),
        Command::SvCheck => run_sv_check(&config, &opts.out),
    }
}

fn window(config: &Config, default: (u32, u32)) -> Result<(u32, u32), CliError> {
    if config.contains("window") {
        parse_window(config.str("window")?)
    } else {
        Ok(default)
    }
}

fn create(out: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = out.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

fn report_outcome(mut report: RatioReport, config: &Config, out: &Path, kind: &str) -> Result<Outcome, CliError> {
    let derived = std::mem::replace(&mut report.params, config.echo());
    report.notes.insert(0, format!("derived {derived}"));
    let (csv, dat) = write_report(&report, out, kind)?;
    Ok(Outcome {
        passed: report.verdict.passed,
        summary: report.summary(),
        artifacts: vec![csv, dat],
    })
}

fn per_axis_sizes(config: &Config, m: usize, default: usize) -> Result<Vec<usize>, CliError> {
    if !config.contains("grid") {
        return Ok(vec![default; m]);
    }
    let sizes = config.naturals("grid")?;
    match sizes.len() {
        1 => Ok(vec![sizes[0]; m]),
        len if len == m => Ok(sizes),
        len => Err(CliError::Invalid(format!("grid has {len} entries for {m} axes"))),
    }
}

fn space(config: &Config, p_key: &str, tau_key: &str, v_key: &str) -> Result<SpaceParams, CliError> {
    let p = config.reals(p_key)?;
    let tau = config.reals_or(tau_key, p.clone())?;
    let v = config.weights_or_unit(v_key, p.len())?;
    Ok(SpaceParams::from_parts(&p, &tau, &v)?)
}

fn run_norm(config: &Config, out: &Path) -> Result<Outcome, CliError> {
    config.check_keys(&["function", "p", "tau", "v", "grid", "tol"])?;
    let f: CatalogFunction = config.parsed("function")?;
    let params = space(config, "p", "tau", "v")?;
    let sizes = per_axis_sizes(config, params.dims(), 256)?;
    let tol = config.parsed_or("tol", NORM_TOL)?;
    let g = f.sample(&sizes)?;
    let norm = aniso_lk_norm(&g, &params)?;
    let p = params.p();
    let reference_applies = params.axes().iter().all(|a| a.weight().is_unit() && a.tau() == a.p())
        && p.iter().all(|&x| x == p[0]);
    let (path, mut w) = create(out, "norm.csv")?;
    writeln!(w, "# norm {}", config.echo())?;
    writeln!(w, "quantity,value")?;
    writeln!(w, "aniso_lk_norm,{norm:.11e}")?;
    let mut passed = true;
    let mut summary = format!("norm: {norm:.11e}");
    if reference_applies {
        let reference = lp_norm_reference(&g, p[0])?;
        let rel = if reference == 0.0 { norm } else { (norm - reference).abs() / reference };
        passed = rel <= tol;
        writeln!(w, "lp_reference,{reference:.11e}")?;
        writeln!(w, "relative_error,{rel:.11e}")?;
        summary = format!(
            "norm: {} {norm:.11e} vs L_p reference {reference:.11e}, relative error {rel:.3e} (tol {tol:e})",
            if passed { "PASS" } else { "FAIL" }
        );
    }
    w.flush()?;
    Ok(Outcome {
        passed,
        summary,
        artifacts: vec![path],
    })
}

fn run_cross(config: &Config, out: &Path) -> Result<Outcome, CliError> {
    config.check_keys(&["gamma", "n", "set", "caps"])?;
    let gamma = config.reals("gamma")?;
    let n: f64 = config.parsed("n")?;
    let spec = CrossSpec::new(gamma, n)?;
    let set = config.str_or("set", "cross")?;
    let blocks = match set {
        "cross" => cross_blocks(&spec),
        "kappa" => shell_kappa(&spec),
        "y" => shell_y(&spec, &config.naturals("caps")?)?,
        other => return Err(CliError::Invalid(format!("set must be cross, kappa or y, got {other:?}"))),
    };
    let (path, mut w) = create(out, "cross.csv")?;
    writeln!(w, "# cross {}", config.echo())?;
    write_blocks_csv(&blocks, &mut w)?;
    w.flush()?;
    Ok(Outcome {
        passed: true,
        summary: format!("cross: {} blocks in {set}", blocks.len()),
        artifacts: vec![path],
    })
}

fn all_blocks(m: usize, s_max: usize) -> Vec<BlockIndex> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..=s_max).map(move |s| {
                    let mut v = prefix.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(BlockIndex::new).collect()
}

fn run_block_norm(config: &Config, out: &Path) -> Result<Outcome, CliError> {
    config.check_keys(&["p", "tau", "v", "s", "s_max", "grid", "spread"])?;
    let params = space(config, "p", "tau", "v")?;
    let m = params.dims();
    let blocks = match (config.contains("s"), config.contains("s_max")) {
        (true, false) => {
            let s = config.naturals("s")?;
            if s.len() != m {
                return Err(CliError::Invalid(format!("s has {} entries for {m} axes", s.len())));
            }
            vec![BlockIndex::new(s)]
        }
        (false, true) => all_blocks(m, config.parsed("s_max")?),
        _ => return Err(CliError::Invalid("exactly one of s and s_max is required".into())),
    };
    let top = blocks
        .iter()
        .flat_map(|b| b.as_slice().iter().copied())
        .max()
        .unwrap_or(0);
    let sizes = per_axis_sizes(config, m, 1 << (top + 1))?;
    let spread = config.parsed_or("spread", BLOCK_SPREAD)?;
    let mut norms = DirichletNorms::new(params.clone(), Sampling::staggered_half(sizes)?)?;
    let (path, mut w) = create(out, "block-norm.csv")?;
    writeln!(w, "# block-norm {}", config.echo())?;
    let header: Vec<String> = (1..=m).map(|j| format!("s{j}")).collect();
    writeln!(w, "{},norm,predicted,ratio", header.join(","))?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for b in &blocks {
        let norm = norms.block(b)?;
        let predicted = dirichlet_predicted(b, &params);
        let ratio = norm / predicted;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        let idx: Vec<String> = b.as_slice().iter().map(usize::to_string).collect();
        writeln!(w, "{},{norm:.11e},{predicted:.11e},{ratio:.11e}", idx.join(","))?;
    }
    w.flush()?;
    let passed = hi / lo <= spread;
    Ok(Outcome {
        passed,
        summary: format!(
            "block-norm: {} {} blocks, ratio min {lo:.6e} max {hi:.6e} (max/min <= {spread})",
            if passed { "PASS" } else { "FAIL" },
            blocks.len()
        ),
        artifacts: vec![path],
    })
}

fn run_lemma1(config: &Config, out: &Path) -> Result<Outcome, CliError> {
    config.check_keys(&["alpha", "gamma", "gamma_prime", "theta", "v", "tail_tol", "spread", "window"])?;
    let gamma = config.reals("gamma")?;
    let lp = LemmaParams::new(
        config.parsed("alpha")?,
        gamma.clone(),
        config.reals_or("gamma_prime", gamma.clone())?,
        config.reals("theta")?,
        config.weights_or_unit("v", gamma.len())?,
    )?;
    let report = lemma1_report(
        &lp,
        window(config, (10, 25))?,
        config.parsed_or("tail_tol", DEFAULT_TAIL_TOL)?,
        Criterion::TwoSided {
            spread: config.parsed_or("spread", LEMMA1_SPREAD)?,
        },
    )?;
    report_outcome(report, config, out, "lemma1")
}

fn run_lemma2(config: &Config, out: &Path) -> Result<Outcome, CliError> {
    config.check_keys(&["alpha", "gamma", "eps", "v", "spread", "window"])?;
    let gamma = config.reals("gamma")?;
    let m = gamma.len();
    let lp = LemmaParams::for_kappa(
        config.parsed("alpha")?,
        gamma,
        config.reals("eps")?,
        config.weights_or_unit("v", m)?,
    )?;
    let report = lemma2_report(
        &lp,
        window(config, (10, 25))?,
        Criterion::BoundedBelow {
            spread: config.parsed_or("spread", LEMMA2_SPREAD)?,
        },
    )?;
    report_outcome(report, config, out, "lemma2")
}

fn theorem_params(config: &Config) -> Result<TheoremParams, CliError> {
    let source = space(config, "p", "tau1", "v1")?;
    let target = space(config, "q", "tau2", "v2")?;
    let m = source.dims();
    let bp = BesovParams::new(source, config.reals("r")?, config.reals("theta")?)?;
    let gamma_prime = if config.contains("gamma_prime") {
        config.reals("gamma_prime")?
    } else {
        Vec::new()
    };
    let tp = if gamma_prime.is_empty() {
        // γ̄' defaults to γ̄, which needs the source parameters first.
        let probe = TheoremParams::new(bp.clone(), target.clone(), vec![1.0; m])?;
        TheoremParams::new(bp, target, probe.gamma().to_vec())?
    } else {
        TheoremParams::new(bp, target, gamma_prime)?
    };
    Ok(tp)
}

fn run_theorem(config: &Config, out: &Path, upper: bool) -> Result<Outcome, CliError> {
    let mut keys = vec![
        "p", "q", "r", "theta", "tau1", "tau2", "v1", "v2", "gamma_prime", "grid", "window",
    ];
    keys.push(if upper { "k" } else { "spread" });
    if upper {
        keys.push("recipe");
    }
    config.check_keys(&keys)?;
    let tp = theorem_params(config)?;
    let oversample: u32 = config.parsed_or("grid", 0)?;
    let win = window(config, (6, 14))?;
    if upper {
        let recipe = match config.str_or("recipe", "shells")? {
            "shells" => MemberRecipe::Shells,
            "lacunary" => MemberRecipe::Lacunary,
            other => return Err(CliError::Invalid(format!("recipe must be shells or lacunary, got {other:?}"))),
        };
        let limit = config.parsed_or("k", UPPER_K)?;
        let report = theorem1_upper_experiment(&tp, win, recipe, oversample, Criterion::BoundedAbove { limit })?;
        report_outcome(report, config, out, "theorem1-upper")
    } else {
        let spread = config.parsed_or("spread", LOWER_SPREAD)?;
        let report = theorem1_lower_experiment(&tp, win, oversample, Criterion::TwoSided { spread })?;
        report_outcome(report, config, out, "theorem1-lower")
    }
}

fn run_sv_check(config: &Config, out: &Path) -> Result<Outcome, CliError> {
    config.check_keys(&["v", "class", "epsilon", "log2_max"])?;
    let v: SvFunction = config.str("v")?.parse()?;
    let class = config.str_or("class", "svl")?;
    let eps = config.reals_or("epsilon", CERTIFY_EPSILONS.to_vec())?;
    let grid = dyadic_log_grid(config.parsed_or("log2_max", CERTIFY_LOG2_MAX)?);
    let (path, mut w) = create(out, "sv-check.csv")?;
    writeln!(w, "# sv-check {}", config.echo())?;
    writeln!(w, "epsilon,grid_len,rising_onset,falling_onset,log_onset,passed")?;
    let mut passed = true;
    for &e in &eps {
        let r = match class {
            "svl" => check_svl_class(&v, e, &grid)?,
            "sv" => check_sv_class(&v, e, &grid)?,
            other => return Err(CliError::Invalid(format!("class must be sv or svl, got {other:?}"))),
        };
        passed &= r.passed;
        let log_onset = r.log_onset.map_or("-".to_string(), |o| o.to_string());
        writeln!(
            w,
            "{},{},{},{},{log_onset},{}",
            r.epsilon, r.grid_len, r.rising_onset, r.falling_onset, r.passed
        )?;
    }
    w.flush()?;
    Ok(Outcome {
        passed,
        summary: format!(
            "sv-check: {} {v} in {} over epsilon {eps:?}",
            if passed { "PASS" } else { "FAIL" },
            class.to_uppercase()
        ),
        artifacts: vec![path],
    })
}
