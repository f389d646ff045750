//! Batch command-line interface: compute, verify, extract. Exit codes:
//! 0 on success, 1 on verification failure, 2 on usage or IO errors.

use clap::{Parser, Subcommand, ValueEnum};
use kptau::checks::{self, CheckResult};
use kptau::correlator;
use kptau::npoly::Rational;
use kptau::store::{self, LayerRanges, ReportEntryJson, ReportJson, TauFile};
use kptau::tau::{self, SeriesKind, TauSeries};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kptau", version, about = "Exact engine for the Kontsevich-Penner tau-function")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineOpt {
    /// Cut-and-join recursion.
    Cutjoin,
    /// Order-by-order constraint solve.
    Linear,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteOpt {
    Annihilation,
    Commutators,
    Miura,
    Oracle,
    Degree,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatOpt {
    Json,
    Text,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the tau series and persist it.
    Compute {
        /// Highest layer (hbar degree) to compute.
        #[arg(long)]
        gmax: u32,
        #[arg(long, value_enum, default_value_t = EngineOpt::Cutjoin)]
        engine: EngineOpt,
        /// Evaluate every coefficient at N = p/q before writing.
        #[arg(long = "eval-n")]
        eval_n: Option<String>,
        /// Resume from an existing series file, computing only missing layers.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run verification suites against a computed series file.
    Verify {
        tau: PathBuf,
        #[arg(long, value_enum, default_value_t = SuiteOpt::All)]
        suite: SuiteOpt,
        /// Residual / basis weight cutoff (defaults adapt to the file).
        #[arg(long = "W")]
        w: Option<i64>,
        /// Operator index range `a..b` (annihilation and commutator suites).
        #[arg(long)]
        range: Option<String>,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Export the open intersection numbers determined by a series file.
    Correlators {
        tau: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatOpt::Both)]
        format: FormatOpt,
    },
    /// Compute a small series in memory and run every suite on it.
    Selfcheck {
        #[arg(long, default_value_t = 3)]
        gmax: u32,
        #[arg(long = "W")]
        w: Option<i64>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Store(#[from] store::StoreError),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Solve(#[from] tau::SolveFailure),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Compute { gmax, engine, eval_n, resume, out } => {
            cmd_compute(gmax, engine, eval_n, resume, out).map(|()| true)
        }
        Cmd::Verify { tau, suite, w, range, report } => cmd_verify(&tau, suite, w, range, report),
        Cmd::Correlators { tau, out, format } => cmd_correlators(&tau, &out, format).map(|()| true),
        Cmd::Selfcheck { gmax, w } => cmd_selfcheck(gmax, w),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_rational(s: &str) -> Result<Rational, CliError> {
    s.parse::<Rational>()
        .map_err(|e| CliError::Config(format!("bad rational {s:?}: {e}")))
}

fn parse_range(s: &str) -> Result<(i64, i64), CliError> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| CliError::Config(format!("range must look like a..b, got {s:?}")))?;
    let lo = a
        .trim()
        .parse::<i64>()
        .map_err(|e| CliError::Config(format!("bad range start {a:?}: {e}")))?;
    let hi = b
        .trim()
        .parse::<i64>()
        .map_err(|e| CliError::Config(format!("bad range end {b:?}: {e}")))?;
    if lo > hi {
        return Err(CliError::Config(format!("empty range {s:?}")));
    }
    Ok((lo, hi))
}

fn cmd_compute(
    gmax: u32,
    engine: EngineOpt,
    eval_n: Option<String>,
    resume: Option<PathBuf>,
    out: PathBuf,
) -> Result<(), CliError> {
    let n_eval = eval_n.as_deref().map(parse_rational).transpose()?;
    let engine_tag = match engine {
        EngineOpt::Cutjoin => "cutjoin",
        EngineOpt::Linear => "linear",
    };
    let start_layers = match &resume {
        None => vec![kptau::TPoly::one()],
        Some(path) => {
            let file = store::read_path(path)?;
            if file.engine != engine_tag {
                return Err(CliError::Config(format!(
                    "resume file was computed with engine {:?}, requested {engine_tag:?}",
                    file.engine
                )));
            }
            if file.kind != "tau" {
                return Err(CliError::Config("can only resume tau files".into()));
            }
            let series = store::from_file(&file)?;
            if series.n_eval() != n_eval.as_ref() {
                return Err(CliError::Config(
                    "resume file and --eval-n disagree on the N evaluation point".into(),
                ));
            }
            series.into_layers()
        }
    };
    let have = start_layers.len();
    let series = match engine {
        EngineOpt::Cutjoin => tau::extend_cutjoin(start_layers, gmax as usize, n_eval.as_ref()),
        EngineOpt::Linear => tau::extend_linear(start_layers, gmax as usize, n_eval.as_ref())?,
    };
    let ranges = match engine {
        EngineOpt::Cutjoin => None,
        EngineOpt::Linear => Some(
            (1..=gmax as usize)
                .map(|g| {
                    let (l_ks, m_ks) = tau::constraint_ranges(g);
                    LayerRanges { layer: g as u32, l_ks, m_ks }
                })
                .collect(),
        ),
    };
    store::write_path(&out, &store::to_file(&series, engine_tag, ranges))?;
    println!(
        "wrote {} (layers 0..={}, {} reused, engine {engine_tag})",
        out.display(),
        series.g_max(),
        have.min(gmax as usize + 1),
    );
    Ok(())
}

fn load_series(path: &Path) -> Result<(TauSeries, TauFile), CliError> {
    let file = store::read_path(path)?;
    let series = store::from_file(&file)?;
    Ok((series, file))
}

fn print_results(results: &[CheckResult]) {
    for r in results {
        if r.pass {
            println!("PASS {}", r.name);
        } else {
            println!("FAIL {} -- {}", r.name, r.detail);
        }
    }
}

fn suite_results(
    series: &TauSeries,
    suite: SuiteOpt,
    w: Option<i64>,
    range: Option<(i64, i64)>,
) -> Result<Vec<CheckResult>, CliError> {
    let gmax = series.g_max();
    let mut out = Vec::new();
    let annihilation = |out: &mut Vec<CheckResult>| -> Result<(), CliError> {
        // choose a residual cutoff the stored layers can support
        let w_res = w.unwrap_or_else(|| (3 * gmax as i64 - 11).clamp(0, 12));
        let (lo, hi) = range.unwrap_or((-2, 5));
        let max_l = (3 * gmax as i64 + 2 - w_res - 3).div_euclid(2);
        let max_m = (3 * gmax as i64 + 2 - w_res - 6).div_euclid(2);
        let l_ks: Vec<i64> = (lo.max(-1)..=hi.min(max_l)).collect();
        let m_ks: Vec<i64> = (lo.max(-2)..=hi.min(max_m)).collect();
        if l_ks.is_empty() && m_ks.is_empty() {
            return Err(CliError::Config(format!(
                "no operator in {lo}..{hi} is verifiable at weight {w_res} with {gmax} layers"
            )));
        }
        let report = tau::verify_annihilation(series, &l_ks, &m_ks, w_res)
            .map_err(|e| CliError::Config(e.to_string()))?;
        for e in &report.entries {
            out.push(CheckResult {
                name: format!("{} tau = 0 (weight <= {})", e.operator, e.max_weight),
                pass: e.pass,
                detail: if e.pass { String::new() } else { format!("residual {}", e.residual) },
            });
        }
        Ok(())
    };
    match suite {
        SuiteOpt::Annihilation => annihilation(&mut out)?,
        SuiteOpt::Degree => {
            let report = tau::degree_check(series);
            for e in &report.entries {
                out.push(CheckResult {
                    name: format!("D tau^({}) = {} tau^({})", e.index, e.index, e.index),
                    pass: e.pass,
                    detail: if e.pass { String::new() } else { format!("residual {}", e.residual) },
                });
            }
        }
        SuiteOpt::Commutators => {
            let wb = w.unwrap_or(9);
            let (lo, hi) = range.unwrap_or((-3, 3));
            for h in [kptau::constraints::Hier::Kp, kptau::constraints::Hier::Mkp] {
                out.extend(checks::wcomr_suite(h, lo, hi, wb));
            }
            out.extend(checks::cal_virasoro_suite(lo.max(-3), hi.min(3), wb));
            out.extend(checks::cal_w_suite(&[(1, -1), (2, -2), (3, -2), (3, -3)], wb));
            out.extend(checks::lsf_mstar_suite(&[(1, -1), (0, 1), (2, -2)], wb));
        }
        SuiteOpt::Miura => {
            let wb = w.unwrap_or(9);
            let (lo, hi) = range.unwrap_or((-6, 6));
            out.extend(checks::miura_suite(lo, hi, wb));
        }
        SuiteOpt::Oracle => {
            if series.kind() != SeriesKind::Tau {
                return Err(CliError::Config("oracle suite needs a tau file".into()));
            }
            let recomputed = tau::compute_tau_linear_at(gmax, series.n_eval())?;
            for g in 0..=gmax {
                let pass = series.layer(g) == recomputed.layer(g);
                out.push(CheckResult {
                    name: format!("file layer {g} = constraint-solver layer {g}"),
                    pass,
                    detail: if pass { String::new() } else { "layers differ".into() },
                });
            }
        }
        SuiteOpt::All => {
            annihilation(&mut out)?;
            out.extend(suite_results(series, SuiteOpt::Degree, None, None)?);
            if series.n_eval().is_none() {
                out.extend(suite_results(series, SuiteOpt::Commutators, None, None)?);
                out.extend(suite_results(series, SuiteOpt::Miura, None, None)?);
            }
            out.extend(suite_results(series, SuiteOpt::Oracle, None, None)?);
        }
    }
    Ok(out)
}

fn cmd_verify(
    path: &Path,
    suite: SuiteOpt,
    w: Option<i64>,
    range: Option<String>,
    report_path: Option<PathBuf>,
) -> Result<bool, CliError> {
    let (series, _file) = load_series(path)?;
    let range = range.as_deref().map(parse_range).transpose()?;
    let results = suite_results(&series, suite, w, range)?;
    print_results(&results);
    let pass = checks::all_pass(&results);
    if let Some(rp) = report_path {
        let json = ReportJson {
            suite: match suite {
                SuiteOpt::Annihilation => "annihilation",
                SuiteOpt::Commutators => "commutators",
                SuiteOpt::Miura => "miura",
                SuiteOpt::Oracle => "oracle",
                SuiteOpt::Degree => "degree",
                SuiteOpt::All => "all",
            }
            .to_string(),
            pass,
            entries: results
                .iter()
                .map(|r| ReportEntryJson {
                    name: r.name.clone(),
                    pass: r.pass,
                    detail: r.detail.clone(),
                })
                .collect(),
        };
        let body = serde_json::to_string_pretty(&json).expect("report serializes") + "\n";
        std::fs::write(&rp, body).map_err(|source| store::StoreError::Io {
            path: rp.display().to_string(),
            source,
        })?;
    }
    println!("{}", if pass { "verification passed" } else { "verification FAILED" });
    Ok(pass)
}

fn cmd_correlators(path: &Path, out: &Path, format: FormatOpt) -> Result<(), CliError> {
    let (series, _file) = load_series(path)?;
    if series.kind() != SeriesKind::Tau {
        return Err(CliError::Config("correlator export needs a tau file".into()));
    }
    if series.n_eval().is_some() {
        return Err(CliError::Config(
            "correlator export needs the symbolic N dependence (recompute without --eval-n)".into(),
        ));
    }
    let f = correlator::free_energy(&series);
    let rows = correlator::correlator_table(&f).map_err(|e| CliError::Config(e.to_string()))?;
    let write = |p: &Path, body: String| -> Result<(), CliError> {
        std::fs::write(p, body).map_err(|source| {
            CliError::Store(store::StoreError::Io { path: p.display().to_string(), source })
        })
    };
    match format {
        FormatOpt::Json => {
            let body = serde_json::to_string_pretty(&store::table_to_json(&rows)).unwrap() + "\n";
            write(out, body)?;
        }
        FormatOpt::Text => {
            write(out, correlator::table_to_text(&rows))?;
        }
        FormatOpt::Both => {
            let body = serde_json::to_string_pretty(&store::table_to_json(&rows)).unwrap() + "\n";
            write(out, body)?;
            let txt = out.with_extension("txt");
            write(&txt, correlator::table_to_text(&rows))?;
        }
    }
    println!("wrote {} correlators to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_selfcheck(gmax: u32, w: Option<i64>) -> Result<bool, CliError> {
    let g = gmax as usize;
    let wb = w.unwrap_or(6);
    println!("computing tau through layer {g} by both engines ...");
    let mut results = checks::oracle_suite(g);
    let series = tau::compute_tau_cutjoin(g);
    let w_res = (3 * g as i64 - 4).clamp(0, 9);
    let (l_ks, m_ks) = (vec![-1i64, 0], vec![-2i64, -1]);
    let report = tau::verify_annihilation(&series, &l_ks, &m_ks, w_res)
        .map_err(|e| CliError::Config(e.to_string()))?;
    for e in &report.entries {
        results.push(CheckResult {
            name: format!("{} tau = 0 (weight <= {})", e.operator, e.max_weight),
            pass: e.pass,
            detail: String::new(),
        });
    }
    let degree = tau::degree_check(&series);
    results.push(CheckResult {
        name: "degree operator eigenvalues".into(),
        pass: degree.pass(),
        detail: String::new(),
    });
    for h in [kptau::constraints::Hier::Kp, kptau::constraints::Hier::Mkp] {
        results.extend(checks::wcomr_suite(h, -2, 2, wb));
    }
    results.extend(checks::cal_virasoro_suite(-2, 2, wb));
    results.extend(checks::cal_w_suite(&[(1, -1), (2, -2)], wb));
    results.extend(checks::miura_suite(-3, 3, wb));
    results.extend(checks::proportionality_suite(-1, 2, wb));
    results.extend(checks::kw_reduction_suite(-1, 2, wb));
    results.extend(checks::w_shift_suite(wb));
    results.extend(checks::convention_suite(wb.max(8)));
    print_results(&results);
    let pass = checks::all_pass(&results);
    println!("{}", if pass { "selfcheck passed" } else { "selfcheck FAILED" });
    Ok(pass)
}
