use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wayfind::cnn::{train, CnnConfig, CnnModel};
use wayfind::corpus::{
    default_departments, default_templates, generate_corpus, kfold, load_departments, load_templates, read_jsonl,
    split_holdout, write_jsonl, DatasetSplit, Department, LabeledQuery, QueryTemplate,
};
use wayfind::eval::{dump_predictions, evaluate, render_table, reports_json, AccuracyReport, Predictor};
use wayfind::levmatch::{LevMatcher, DEFAULT_THRESHOLD};
use wayfind::linear::{train_linear, LinearConfig};
use wayfind::navigate::FloorGraph;
use wayfind::server::{plan_route, serve, AppState, ModelSnapshot};
use wayfind::{Error, Result};

#[derive(Parser)]
#[command(name = "wayfind", version, about = "Origin/destination detection for wayfinding queries")]
struct Cli {
    /// Seed for corpus shuffling, splits and model initialization.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with CNN hyperparameters (CnnConfig field names).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Department lexicon, one name per line. Defaults to the shipped list.
    #[arg(long, global = true)]
    departments: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArgs {
    /// Use a JSON-lines corpus instead of generating one.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Query templates, one per line. Defaults to the shipped list.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Keep only the first N departments of the lexicon.
    #[arg(long)]
    limit_departments: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Protocol {
    /// One seeded 70/30 split.
    Holdout,
    /// Ten 70/30 splits with seeds 0..9, averaged.
    Repeated,
    /// Classic 10-fold cross-validation.
    Kfold,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the labeled query corpus.
    GenCorpus {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Train the CNN on a 70/30 split and save a checkpoint.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
        /// Train on the whole corpus instead of the training split.
        #[arg(long)]
        all: bool,
    },
    /// Compare the CNN with the edit-distance and n-gram baselines.
    Eval {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum, default_value_t = Protocol::Repeated)]
        protocol: Protocol,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Skip the CNN (baselines only).
        #[arg(long)]
        no_cnn: bool,
        /// Skip the n-gram linear baselines.
        #[arg(long)]
        no_linear: bool,
        /// Hashing buckets for the linear baselines (power of two).
        #[arg(long)]
        buckets: Option<usize>,
        /// Queries (one per line) to include in the prediction dump.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Predict origin and destination with a trained checkpoint.
    Detect {
        #[arg(long)]
        model: PathBuf,
        query: String,
    },
    /// Run the edit-distance directory matcher on a query.
    Levmatch {
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        query: String,
    },
    /// Shortest route between two departments (names or ids).
    Route {
        #[arg(long)]
        graph: Option<PathBuf>,
        from: String,
        to: String,
    },
    /// Serve the JSON API (and optionally a static UI directory).
    Serve {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 1,
        Error::Io { .. }
        | Error::Data(_)
        | Error::EmptyQuery
        | Error::UnknownDepartment(_)
        | Error::UnknownNode(_)
        | Error::NoRoute { .. }
        | Error::Checkpoint(_)
        | Error::Json(_) => 2,
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).map_err(io(path))
}

struct Context {
    seed: u64,
    config: CnnConfig,
    out: PathBuf,
    departments: Vec<Department>,
}

impl Context {
    fn new(cli: &Cli) -> Result<Self> {
        let mut config: CnnConfig = match &cli.config {
            Some(p) => serde_json::from_str(&fs::read_to_string(p).map_err(io(p))?)?,
            None => CnnConfig::default(),
        };
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        let departments = match &cli.departments {
            Some(p) => load_departments(p)?,
            None => default_departments(),
        };
        Ok(Self {
            seed: config.seed,
            config,
            out: cli.out.clone(),
            departments,
        })
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).map_err(io(&self.out))?;
        Ok(&self.out)
    }

    fn corpus(&mut self, args: &CorpusArgs) -> Result<Vec<LabeledQuery>> {
        if let Some(n) = args.limit_departments {
            if n < 2 || n > self.departments.len() {
                return Err(Error::InvalidArgument(format!(
                    "--limit-departments must be between 2 and {}",
                    self.departments.len()
                )));
            }
            self.departments.truncate(n);
        }
        if let Some(p) = &args.corpus {
            let queries = read_jsonl(p)?;
            let p = self.departments.len();
            if let Some(q) = queries.iter().find(|q| q.origin_id >= p || q.destination_id >= p) {
                return Err(Error::UnknownDepartment(q.origin_id.max(q.destination_id)));
            }
            return Ok(queries);
        }
        let templates: Vec<QueryTemplate> = match &args.templates {
            Some(p) => load_templates(p)?,
            None => default_templates(),
        };
        Ok(generate_corpus(&self.departments, &templates, self.seed)?.queries)
    }

    fn resolve(&self, key: &str) -> Result<usize> {
        if let Ok(id) = key.parse::<usize>() {
            return Ok(id);
        }
        self.departments
            .iter()
            .find(|d| d.name.eq_ignore_ascii_case(key.trim()))
            .map(|d| d.id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown department {key:?}")))
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut ctx = Context::new(&cli)?;
    match cli.command {
        Command::GenCorpus { corpus } => {
            let queries = ctx.corpus(&corpus)?;
            let path = ctx.out_dir()?.join("corpus.jsonl");
            write_jsonl(&path, &queries)?;
            println!("{} queries written to {}", queries.len(), path.display());
        }
        Command::Train {
            corpus,
            train_fraction,
            all,
        } => {
            let queries = ctx.corpus(&corpus)?;
            let data = if all {
                queries
            } else {
                split_holdout(&queries, train_fraction, ctx.seed)?.train
            };
            let (model, history) = train(&ctx.config, &ctx.departments, &data)?;
            let out = ctx.out_dir()?;
            model.save(out.join("model.ckpt"))?;
            model.vocab.write_jsonl(out.join("vocab.jsonl"))?;
            write_json(&out.join("history.json"), &history)?;
            println!(
                "trained on {} queries, best epoch {}, checkpoint {}",
                data.len(),
                history.best_epoch,
                out.join("model.ckpt").display()
            );
        }
        Command::Eval {
            corpus,
            protocol,
            train_fraction,
            folds,
            no_cnn,
            no_linear,
            buckets,
            dump,
        } => {
            let queries = ctx.corpus(&corpus)?;
            let splits: Vec<DatasetSplit> = match protocol {
                Protocol::Holdout => vec![split_holdout(&queries, train_fraction, ctx.seed)?],
                Protocol::Repeated => (0..10)
                    .map(|s| split_holdout(&queries, train_fraction, s))
                    .collect::<Result<_>>()?,
                Protocol::Kfold => kfold(&queries, folds, ctx.seed)?,
            };
            let lev = LevMatcher::new(&ctx.departments, DEFAULT_THRESHOLD);
            let mut per_model: Vec<Vec<AccuracyReport>> = Vec::new();
            let mut last_cnn: Option<CnnModel> = None;
            for (i, split) in splits.iter().enumerate() {
                let tag = match protocol {
                    Protocol::Kfold => format!("fold {i}"),
                    _ => format!("holdout seed {}", split.seed),
                };
                log::info!("{tag}: {} train / {} test", split.train.len(), split.test.len());
                let mut reports = vec![evaluate(&lev, &split.test, &tag)?];
                if !no_linear {
                    for n_max in 1..=3 {
                        let cfg = LinearConfig {
                            n_max,
                            buckets: buckets.unwrap_or(LinearConfig::default().buckets),
                            seed: ctx.seed,
                            ..Default::default()
                        };
                        let model = train_linear(&cfg, &ctx.departments, &split.train)?;
                        reports.push(evaluate(&model, &split.test, &tag)?);
                    }
                }
                if !no_cnn {
                    let (model, _) = train(&ctx.config, &ctx.departments, &split.train)?;
                    reports.push(evaluate(&model, &split.test, &tag)?);
                    last_cnn = Some(model);
                }
                for (j, r) in reports.into_iter().enumerate() {
                    if per_model.len() <= j {
                        per_model.push(Vec::new());
                    }
                    per_model[j].push(r);
                }
            }
            let summary: Vec<AccuracyReport> = per_model.iter().filter_map(|r| AccuracyReport::mean(r)).collect();
            let table = render_table(&summary);
            println!("{table}");
            let out = ctx.out_dir()?;
            fs::write(out.join("table.md"), &table).map_err(io(&out.join("table.md")))?;
            let all: Vec<AccuracyReport> = per_model.into_iter().flatten().chain(summary).collect();
            let report_path = out.join("report.json");
            fs::write(&report_path, reports_json(&all)?).map_err(io(&report_path))?;
            if let Some(p) = dump {
                let text = fs::read_to_string(&p).map_err(io(&p))?;
                let qs: Vec<String> = text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect();
                let rows = dump_predictions(&lev, last_cnn.as_ref(), &qs);
                let dump_path = out.join("predictions.jsonl");
                let mut buf = String::new();
                for r in &rows {
                    buf.push_str(&serde_json::to_string(r)?);
                    buf.push('\n');
                }
                fs::write(&dump_path, buf).map_err(io(&dump_path))?;
            }
        }
        Command::Detect { model, query } => {
            let model = CnnModel::load(&model)?;
            let p = model.predict(&query)?;
            println!("{}", serde_json::to_string_pretty(&p)?);
        }
        Command::Levmatch { threshold, query } => {
            let lev = LevMatcher::new(&ctx.departments, threshold);
            let (origin, destination) = lev.predict_ids(&query)?;
            let report = lev.analyze(&query);
            let name = |id: Option<usize>| id.map(|i| lev.directory.name(i).to_string());
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "origin": name(origin),
                    "destination": name(destination),
                    "report": report,
                }))?
            );
        }
        Command::Route { graph, from, to } => {
            let graph = load_graph(graph.as_deref())?;
            let r = plan_route(&graph, ctx.resolve(&from)?, ctx.resolve(&to)?)?;
            for step in &r.steps {
                println!("{}", step.sentence());
            }
            println!("Total: {:.1} m", r.length);
        }
        Command::Serve {
            model,
            graph,
            addr,
            static_dir,
        } => {
            let state = Arc::new(AppState::new(load_graph(graph.as_deref())?, ctx.departments.clone()));
            if let Some(p) = model {
                let model = CnnModel::load(&p)?;
                state.set_model(Some(ModelSnapshot::new(model)?));
            } else {
                log::warn!("no model given; /api/detect will answer 503");
            }
            let rt = tokio::runtime::Runtime::new().map_err(io(Path::new("tokio runtime")))?;
            rt.block_on(serve(addr, state, static_dir))?;
        }
    }
    Ok(())
}

fn load_graph(path: Option<&Path>) -> Result<FloorGraph> {
    match path {
        Some(p) => FloorGraph::load(p),
        None => Ok(FloorGraph::demo()),
    }
}
