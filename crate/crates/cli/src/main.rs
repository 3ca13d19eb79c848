//! `mortstat` command-line front end.

mod output;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mortstat::cox::{cox_fit, CovariateSpec};
use mortstat::io;
use mortstat::media::{phrase_scan, Country, Document, Medium, PublisherCounts};
use mortstat::report::{self, Computed, MediaReport};
use mortstat::sim::{self, BiasResult, IndicatorCounts, SimConfig};
use mortstat::survival::{kaplan_meier, Cohort, SurvivalCurve};

use output::Outputs;

const LOG_ENV: &str = "MORTSTAT_LOG";

#[derive(Parser)]
#[command(name = "mortstat", version, about = "Survival analysis and COVID-19 media phrasing statistics")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed of stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Format of the summary printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Per-country phrasing analysis of publisher counts CSVs.
    Analyze {
        #[arg(required = true)]
        counts: Vec<PathBuf>,
    },
    /// Count phrasings in a corpus laid out as <dir>/<publisher>/<documents>.
    Scan {
        corpus: PathBuf,
        #[arg(long, default_value = "UK")]
        country: Country,
        #[arg(long, default_value = "newspaper")]
        medium: Medium,
    },
    /// Kaplan-Meier curve with Greenwood variance.
    Km { cohort: PathBuf },
    /// Cox proportional-hazards fit over every covariate column.
    Cox { cohort: PathBuf },
    /// Misclassification bias experiment and England death indicators.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        /// Death records CSV to run the indicators on instead of simulated ones.
        #[arg(long)]
        deaths: Option<PathBuf>,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Input(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<mortstat::Error> for Failure {
    fn from(e: mortstat::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.into())
        } else {
            Failure::Input(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<mortstat::Error>() {
            Ok(m) => m.into(),
            Err(e) => Failure::Input(e),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Outcome<String> {
    let mut outputs = Outputs::default();
    let (name, inputs, summary) = match &cli.command {
        Command::Analyze { counts } => ("analyze", counts.clone(), analyze(cli, counts, &mut outputs)?),
        Command::Scan {
            corpus,
            country,
            medium,
        } => ("scan", vec![corpus.clone()], scan(cli, corpus, *country, *medium, &mut outputs)?),
        Command::Km { cohort } => ("km", vec![cohort.clone()], km(cli, cohort, &mut outputs)?),
        Command::Cox { cohort } => ("cox", vec![cohort.clone()], cox(cli, cohort, &mut outputs)?),
        Command::Simulate {
            config,
            replicates,
            deaths,
        } => {
            let mut inputs = vec![config.clone()];
            inputs.extend(deaths.clone());
            let s = simulate(cli, config, *replicates, deaths.as_deref(), &mut outputs)?;
            ("simulate", inputs, s)
        }
    };
    outputs
        .commit(&cli.out, name, &inputs)
        .map_err(|e| Failure::Input(e.context("writing outputs")))?;
    Ok(summary)
}

fn open(path: &Path) -> Outcome<fs::File> {
    fs::File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(Failure::Input)
}

fn json<T: Serialize>(value: &T) -> Outcome<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.into()))?;
    s.push('\n');
    Ok(s)
}

fn analyze(cli: &Cli, paths: &[PathBuf], out: &mut Outputs) -> Outcome<String> {
    let mut rows: Vec<PublisherCounts> = Vec::new();
    for p in paths {
        let table = io::read_counts(open(p)?, &p.display().to_string())?;
        if let Some(i) = table.iter().position(|r| r.total() == 0) {
            return Err(Failure::Input(anyhow!(
                "{}: line {}: publisher `{}` has no matching articles",
                p.display(),
                i + 2,
                table[i].name
            )));
        }
        rows.extend(table);
    }
    log::info!("analysing {} publisher rows", rows.len());
    let rep = report::analyze(&rows)?;
    let text = report::render_text(&rep);

    for c in &rep.countries {
        let tag = c.country.to_string().to_lowercase();
        let group: Vec<&PublisherCounts> = rows.iter().filter(|r| r.country == c.country).collect();
        let line = c.scatter_line.value().map(|l| (l.slope, l.intercept));
        let mut csv = String::from("name,total,incorrect,fitted\n");
        for r in &group {
            let fitted = line.map_or(String::new(), |(m, b)| (m * r.total() as f64 + b).to_string());
            csv.push_str(&format!("{},{},{},{fitted}\n", csv_field(&r.name), r.total(), r.incorrect()));
        }
        let points: Vec<(String, f64, f64)> = group
            .iter()
            .map(|r| (r.name.clone(), r.total() as f64, r.incorrect() as f64))
            .collect();
        let title = match &c.pearson_total_incorrect {
            Computed::Value(r) => format!("{} publishers (r = {r:.3})", c.country),
            Computed::Missing { .. } => format!("{} publishers", c.country),
        };
        out.add(format!("scatter_{tag}.csv"), csv);
        out.add(format!("scatter_{tag}.svg"), plot::scatter(&title, &points, line));
    }
    out.add("report.txt", text.clone());
    out.add_json("report.json", &rep).map_err(Failure::Input)?;

    Ok(match cli.format {
        Format::Text => text,
        Format::Csv => report::render_csv(&rep),
        Format::Json => json::<MediaReport>(&rep)?,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn read_corpus(dir: &Path) -> Outcome<Vec<Document>> {
    if !dir.is_dir() {
        return Err(Failure::Input(anyhow!("corpus directory {} does not exist", dir.display())));
    }
    let sorted = |p: &Path| -> anyhow::Result<Vec<PathBuf>> {
        let mut v = fs::read_dir(p)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<Vec<_>>>()?;
        v.sort();
        Ok(v)
    };
    let mut docs = Vec::new();
    for publisher_dir in sorted(dir)?.into_iter().filter(|p| p.is_dir()) {
        let publisher = publisher_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for file in sorted(&publisher_dir)?.into_iter().filter(|p| p.is_file()) {
            let bytes = fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            docs.push(Document {
                publisher: publisher.clone(),
                bytes,
            });
        }
    }
    Ok(docs)
}

fn scan(cli: &Cli, dir: &Path, country: Country, medium: Medium, out: &mut Outputs) -> Outcome<String> {
    let docs = read_corpus(dir)?;
    log::info!("scanning {} documents", docs.len());
    let result = phrase_scan(&docs);
    if result.skipped > 0 {
        log::warn!("{} documents were not valid UTF-8 and were skipped", result.skipped);
    }
    let counts = result.into_counts(country, medium);
    let mut buf = Vec::new();
    io::write_counts(&mut buf, &counts)?;
    let csv = String::from_utf8(buf).map_err(|e| Failure::Input(e.into()))?;
    out.add("counts.csv", csv.clone());
    Ok(match cli.format {
        Format::Json => json(&counts)?,
        Format::Csv => csv,
        Format::Text => counts
            .iter()
            .map(|c| format!("{}: with={} from={} of={}\n", c.name, c.with_count, c.from_count, c.of_count))
            .collect(),
    })
}

fn read_cohort(path: &Path) -> Outcome<io::CohortTable> {
    Ok(io::read_cohort(open(path)?, &path.display().to_string())?)
}

fn curve_csv(curve: &SurvivalCurve) -> Outcome<String> {
    let mut buf = Vec::new();
    io::write_curve_csv(&mut buf, curve)?;
    String::from_utf8(buf).map_err(|e| Failure::Input(e.into()))
}

/// Splits on the first covariate when it is a 0/1 indicator taking both values.
fn binary_groups(table: &io::CohortTable) -> Outcome<Option<(String, Cohort, Cohort)>> {
    let Some(name) = table.covariate_names.first() else {
        return Ok(None);
    };
    let subjects = table.cohort.subjects();
    if !subjects.iter().all(|s| s.covariates[0] == 0.0 || s.covariates[0] == 1.0) {
        return Ok(None);
    }
    let (ones, zeros): (Vec<_>, Vec<_>) = subjects.iter().cloned().partition(|s| s.covariates[0] == 1.0);
    if ones.is_empty() || zeros.is_empty() {
        return Ok(None);
    }
    Ok(Some((
        name.clone(),
        Cohort::new(format!("{name}=0"), zeros)?,
        Cohort::new(format!("{name}=1"), ones)?,
    )))
}

fn km(cli: &Cli, path: &Path, out: &mut Outputs) -> Outcome<String> {
    let table = read_cohort(path)?;
    let curve = kaplan_meier(&table.cohort);
    let csv = curve_csv(&curve)?;
    let json_text = io::curve_to_json(&curve)?;
    out.add("km.csv", csv.clone());
    out.add("km.json", format!("{json_text}\n"));

    let label = table.cohort.label().to_string();
    let svg = match binary_groups(&table)? {
        Some((name, zeros, ones)) => {
            let c0 = kaplan_meier(&zeros);
            let c1 = kaplan_meier(&ones);
            out.add(format!("km_{name}_0.csv"), curve_csv(&c0)?);
            out.add(format!("km_{name}_1.csv"), curve_csv(&c1)?);
            plot::survival(
                &format!("Kaplan-Meier: {label}"),
                &[(zeros.label().to_string(), &c0), (ones.label().to_string(), &c1)],
            )
        }
        None => plot::survival(&format!("Kaplan-Meier: {label}"), &[(label.clone(), &curve)]),
    };
    out.add("km.svg", svg);

    Ok(match cli.format {
        Format::Json => format!("{json_text}\n"),
        Format::Csv => csv,
        Format::Text => curve
            .steps
            .iter()
            .map(|s| format!("t={} d={} n={} S={:.4} sd={:.4}\n", s.time, s.deaths, s.at_risk, s.estimate, s.variance.sqrt()))
            .collect(),
    })
}

fn cox(cli: &Cli, path: &Path, out: &mut Outputs) -> Outcome<String> {
    let table = read_cohort(path)?;
    if table.covariate_names.is_empty() {
        return Err(Failure::Input(anyhow!("{} has no covariate columns", path.display())));
    }
    let spec = CovariateSpec::new(table.covariate_names.iter().cloned())?;
    let fit = cox_fit(&table.cohort, &spec)?;
    if !fit.converged {
        log::warn!("Cox fit stopped after {} iterations without converging", fit.iterations);
    }
    out.add_json("cox.json", &fit).map_err(Failure::Input)?;
    Ok(match cli.format {
        Format::Json => json(&fit)?,
        Format::Csv => {
            let mut s = String::from("covariate,coefficient,hazard_ratio,standard_error\n");
            for (i, name) in spec.names().iter().enumerate() {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    csv_field(name),
                    fit.coefficients[i],
                    fit.hazard_ratios[i],
                    fit.standard_errors[i]
                ));
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (i, name) in spec.names().iter().enumerate() {
                s.push_str(&format!(
                    "{name}: coef={:.4} HR={:.4} se={:.4}\n",
                    fit.coefficients[i], fit.hazard_ratios[i], fit.standard_errors[i]
                ));
            }
            s.push_str(&format!(
                "log partial likelihood {:.4}, {} iterations, converged={}\n",
                fit.log_partial_likelihood, fit.iterations, fit.converged
            ));
            s
        }
    })
}

#[derive(Serialize)]
struct SimulationReport {
    config: SimConfig,
    bias: BiasResult,
    indicators: IndicatorCounts,
    indicator_source: String,
}

fn simulate(
    cli: &Cli,
    path: &Path,
    replicates: usize,
    deaths: Option<&Path>,
    out: &mut Outputs,
) -> Outcome<String> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)?;
    let mut config = SimConfig::from_kv_str(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    log::info!("running {replicates} replicates");
    let bias = sim::bias_experiment(&config, replicates)?;
    let (records, source) = match deaths {
        Some(p) => (
            io::read_death_records(open(p)?, &p.display().to_string())?,
            p.display().to_string(),
        ),
        None => {
            let cohorts = sim::generate_cohorts(&config)?;
            (sim::death_records(&cohorts, &config), "simulated replicate 0".to_string())
        }
    };
    let rep = SimulationReport {
        indicators: sim::england_indicators(&records),
        indicator_source: source,
        config,
        bias,
    };
    out.add_json("simulate.json", &rep).map_err(Failure::Input)?;
    let b = &rep.bias;
    let i = &rep.indicators;
    Ok(match cli.format {
        Format::Json => json(&rep)?,
        Format::Csv => format!(
            "hr_clean,hr_contaminated,mean_inflation,inflation_std_error,replicates,failed_replicates,any_prior,within_28,within_60_or_cert\n{},{},{},{},{},{},{},{},{}\n",
            b.hr_clean,
            b.hr_contaminated,
            b.mean_inflation,
            b.inflation_std_error,
            b.replicates,
            b.failed_replicates,
            i.any_prior,
            i.within_28,
            i.within_60_or_cert
        ),
        Format::Text => format!(
            "hazard ratio clean {:.3}, contaminated {:.3}, inflation {:.3} ± {:.3} ({} replicates, {} failed)\ndeaths: any prior test {}, within 28 days {}, within 60 days or certificate {}\n",
            b.hr_clean,
            b.hr_contaminated,
            b.mean_inflation,
            b.inflation_std_error,
            b.replicates,
            b.failed_replicates,
            i.any_prior,
            i.within_28,
            i.within_60_or_cert
        ),
    })
}
