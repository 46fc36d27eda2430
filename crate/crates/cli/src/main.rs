use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mergetree::ensemble::{self, KmeansOptions};
use mergetree::interp::{self, PmOptions, Variant};
use mergetree::io::{self, Highlight, Manifest};
use mergetree::synth::{self, AnalyticConfig};
use mergetree::{branch_decomposition_elder, join_tree, simplify, split_tree, MergeTree, Metric};

#[derive(Parser)]
#[command(name = "mergetree", version, about = "Merge tree distances, geodesics, barycenters and ensemble analysis")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = MetricArg::Path)]
    metric: MetricArg,
    /// Output file (directory for `gen`); standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress summaries on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    /// Bound on concurrent distance computations.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Path,
    Wasserstein,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Path => Metric::Path,
            MetricArg::Wasserstein => Metric::Wasserstein,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Mean,
    Median,
}

#[derive(Args)]
struct Members {
    /// Member files: tree JSON, or grid text turned into simplified trees.
    files: Vec<PathBuf>,
    /// Manifest JSON listing the members instead of positional files.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Simplification threshold (fraction of the scalar range) for grids.
    #[arg(long, default_value_t = 0.02)]
    threshold: f64,
    /// Build join trees from grids instead of split trees.
    #[arg(long)]
    join: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Merge tree of a grid file.
    Tree {
        grid: PathBuf,
        #[arg(long)]
        join: bool,
        /// Persistence simplification threshold as a fraction of the range.
        #[arg(long)]
        threshold: Option<f64>,
        /// Emit Graphviz colored by elder branches instead of JSON.
        #[arg(long)]
        dot: bool,
    },
    /// Persistence simplification of a tree.
    Simplify {
        tree: PathBuf,
        #[arg(long)]
        threshold: f64,
    },
    /// Distance between two trees.
    Dist {
        #[arg(num_args = 2, required = true)]
        trees: Vec<PathBuf>,
        /// Write the optimal path mapping as JSON (path metric only).
        #[arg(long)]
        mapping: Option<PathBuf>,
    },
    /// Interpolated tree between two trees.
    Geodesic {
        #[arg(num_args = 2, required = true)]
        trees: Vec<PathBuf>,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        dot: bool,
    },
    /// Barycenter of an ensemble.
    Barycenter {
        #[command(flatten)]
        members: Members,
        #[arg(long, value_enum, default_value_t = VariantArg::Mean)]
        variant: VariantArg,
        /// Member used as the initial candidate: an index, or `random` to
        /// draw one with --seed.
        #[arg(long, default_value = "0")]
        init: String,
        /// Tree JSON used as the initial candidate instead of a member (path
        /// metric only).
        #[arg(long, conflicts_with = "init")]
        init_tree: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        /// Per-iteration CSV: iteration, energy and (path metric) node count.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// k-means clustering; prints member,cluster rows.
    Cluster {
        #[command(flatten)]
        members: Members,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Ground-truth labels (CSV); enables the adjusted rand index.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Per-run CSV summary.
        #[arg(long)]
        runs_csv: Option<PathBuf>,
    },
    /// Greedy keyframe selection and reconstruction errors of a time series.
    Reduce {
        #[command(flatten)]
        members: Members,
        #[arg(long)]
        keep: usize,
    },
    /// Synthetic ensembles written as grid files plus a manifest.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Pairwise distance matrix as CSV.
    Matrix {
        #[command(flatten)]
        members: Members,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Four main hills, one carrying five side bumps.
    Analytic {
        #[arg(long, default_value_t = 20)]
        members: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[arg(long, default_value_t = 2.0)]
        jitter: f64,
    },
    /// Three phases of members for clustering, one with a maximum swap.
    SwapClusters {
        #[arg(long, default_value_t = 3)]
        phases: usize,
        #[arg(long, default_value_t = 4)]
        per_phase: usize,
    },
    /// Trees sampled evenly along the geodesic between two trees.
    GeodesicSeries {
        #[arg(num_args = 2, required = true)]
        trees: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        frames: usize,
    },
}

/// Exit codes: 1 for usage errors, 2 for data errors.
enum Failure {
    Usage(String),
    Data(String),
}

impl From<mergetree::Error> for Failure {
    fn from(e: mergetree::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let metric = Metric::from(cli.metric);
    match &cli.command {
        Command::Tree { grid, join, threshold, dot } => {
            let g = io::load_grid(grid)?;
            let mut t = if *join { join_tree(&g)? } else { split_tree(&g)? };
            if let Some(th) = threshold {
                t = simplify(&t, *th)?;
            }
            if *dot {
                let bd = branch_decomposition_elder(&t)?;
                emit(cli, &io::export_dot(&t, Highlight::Branches(&bd)))
            } else {
                emit(cli, &io::tree_to_json(&t))
            }
        }
        Command::Simplify { tree, threshold } => {
            let t = simplify(&io::load_tree(tree)?, *threshold)?;
            emit(cli, &io::tree_to_json(&t))
        }
        Command::Dist { trees, mapping } => {
            let (a, b) = (io::load_tree(&trees[0])?, io::load_tree(&trees[1])?);
            let d = match (metric, mapping) {
                (Metric::Path, Some(path)) => {
                    let r = mergetree::path_mapping_distance(&a, &b)?;
                    write_file(path, &io::mapping_to_json(&r.mapping, &a, &b, Some(r.cost)))?;
                    r.cost
                }
                (Metric::Wasserstein, Some(_)) => {
                    return Err(Failure::Usage("--mapping requires --metric path".into()));
                }
                (m, None) => m.distance(&a, &b)?,
            };
            emit(cli, &format!("{}\n", io::fmt9(d)))
        }
        Command::Geodesic { trees, alpha, dot } => {
            if !(0.0..=1.0).contains(alpha) {
                return Err(Failure::Usage(format!("--alpha {alpha} outside [0, 1]")));
            }
            let (a, b) = (io::load_tree(&trees[0])?, io::load_tree(&trees[1])?);
            let t = ensemble::interpolate(&a, &b, *alpha, metric)?;
            if *dot {
                let bd = branch_decomposition_elder(&t)?;
                emit(cli, &io::export_dot(&t, Highlight::Branches(&bd)))
            } else {
                emit(cli, &io::tree_to_json(&t))
            }
        }
        Command::Barycenter { members, variant, init, init_tree, max_iter, tol, trace } => {
            let (trees, _) = load_members(members)?;
            let init = match init.as_str() {
                "random" => ChaCha8Rng::seed_from_u64(cli.seed).gen_range(0..trees.len()),
                s => s
                    .parse::<usize>()
                    .map_err(|_| Failure::Usage(format!("--init {s}: expected an index or `random`")))?,
            };
            if init >= trees.len() {
                return Err(Failure::Usage(format!("--init {init} but only {} members", trees.len())));
            }
            let variant = match variant {
                VariantArg::Mean => Variant::Mean,
                VariantArg::Median => Variant::Median,
            };
            if metric == Metric::Wasserstein && variant == Variant::Median {
                return Err(Failure::Usage("the median variant requires --metric path".into()));
            }
            if metric == Metric::Wasserstein && init_tree.is_some() {
                return Err(Failure::Usage("--init-tree requires --metric path".into()));
            }
            let opts = PmOptions { variant, init, max_iter: *max_iter, rel_tol: *tol };
            let (tree, energies, sizes, iterations) = match metric {
                Metric::Path => {
                    let r = match init_tree {
                        Some(path) => interp::pm_barycenter_from(&trees, io::load_tree(path)?, &opts)?,
                        None => interp::pm_barycenter(&trees, &opts)?,
                    };
                    (r.tree, r.energy_trace, Some(r.size_trace), r.iterations)
                }
                Metric::Wasserstein => {
                    let (t, e, it) = interp::barycenter(&trees, metric, &opts)?;
                    (t, e, None, it)
                }
            };
            if let Some(path) = trace {
                write_file(path, &trace_csv(&energies, sizes.as_deref()))?;
            }
            note(
                cli,
                &format!(
                    "{iterations} iterations, energy {} -> {}, {} nodes",
                    io::fmt9(energies[0]),
                    io::fmt9(*energies.last().unwrap()),
                    tree.len()
                ),
            );
            emit(cli, &io::tree_to_json(&tree))
        }
        Command::Cluster { members, k, runs, truth, runs_csv } => {
            let (trees, manifest) = load_members(members)?;
            let truth = match truth {
                Some(p) => Some(io::labels_from_csv(&read_file(p)?)?),
                None => manifest.and_then(|m| m.labels),
            };
            let mut opts = KmeansOptions::new(*k, metric);
            opts.runs = *runs;
            opts.seed = cli.seed;
            opts.threads = cli.threads;
            if *k == 0 || *k > trees.len() {
                return Err(Failure::Usage(format!("--k {k} must lie in 1..={}", trees.len())));
            }
            let r = ensemble::kmeans(&trees, &opts, truth.as_deref())?;
            if let Some(path) = runs_csv {
                let mut out = String::from("run,seed,energy,rounds");
                if truth.is_some() {
                    out.push_str(",ari,fully_correct");
                }
                out.push('\n');
                for (i, run) in r.runs.iter().enumerate() {
                    out.push_str(&format!("{i},{},{},{}", run.seed, io::fmt9(run.energy), run.rounds));
                    if let Some(t) = &truth {
                        let ari = ensemble::adjusted_rand_index(&run.assignments, t)?;
                        out.push_str(&format!(
                            ",{},{}",
                            io::fmt9(ari),
                            u8::from(ensemble::fully_correct(&run.assignments, t))
                        ));
                    }
                    out.push('\n');
                }
                write_file(path, &out)?;
            }
            let mut summary = format!("best run {} energy {}", r.best_run, io::fmt9(r.runs[r.best_run].energy));
            if let Some(t) = &truth {
                let aris = r
                    .runs
                    .iter()
                    .map(|run| ensemble::adjusted_rand_index(&run.assignments, t))
                    .collect::<mergetree::Result<Vec<_>>>()?;
                let correct = r.runs.iter().filter(|run| ensemble::fully_correct(&run.assignments, t)).count();
                summary.push_str(&format!(
                    ", best ari {}, mean ari {}, fully correct {correct}/{}",
                    io::fmt9(r.ari.unwrap()),
                    io::fmt9(aris.iter().sum::<f64>() / aris.len() as f64),
                    r.runs.len()
                ));
            }
            note(cli, &summary);
            emit(cli, &io::assignments_csv(&r.assignments))
        }
        Command::Reduce { members, keep } => {
            let (trees, _) = load_members(members)?;
            if *keep < 2 || *keep > trees.len() {
                return Err(Failure::Usage(format!("--keep {keep} must lie in 2..={}", trees.len())));
            }
            let keys = ensemble::temporal_reduce(&trees, *keep, metric)?;
            let r = ensemble::temporal_reconstruct(&trees, &keys, metric)?;
            let list: Vec<String> = keys.iter().map(usize::to_string).collect();
            note(cli, &format!("keyframes {}", list.join(" ")));
            emit(cli, &io::errors_csv(&r.errors))
        }
        Command::Matrix { members } => {
            let (trees, _) = load_members(members)?;
            let m = ensemble::distance_matrix(&trees, metric, cli.threads)?;
            emit(cli, &io::matrix_csv(&m))
        }
        Command::Gen { kind } => {
            let dir = cli.out.as_ref().ok_or_else(|| Failure::Usage("gen needs --out DIR".into()))?;
            fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
            gen(cli, kind, dir)
        }
    }
}

fn gen(cli: &Cli, kind: &GenKind, dir: &Path) -> Outcome {
    let mut manifest = Manifest::default();
    match kind {
        GenKind::Analytic { members, width, height, jitter } => {
            let config = AnalyticConfig {
                members: *members,
                width: *width,
                height: *height,
                seed: cli.seed,
                jitter: *jitter,
                ..AnalyticConfig::default()
            };
            let e = synth::gen_analytical(&config)?;
            for (i, g) in e.grids.iter().enumerate() {
                manifest.members.push(write_member(dir, i, "txt", &io::grid_to_text(g))?);
            }
            note(cli, &format!("{} members, highest hill per member {:?}", e.grids.len(), e.highest_hill));
        }
        GenKind::SwapClusters { phases, per_phase } => {
            let s = synth::gen_swap_clusters(*phases, *per_phase, cli.seed)?;
            for (i, g) in s.grids.iter().enumerate() {
                manifest.members.push(write_member(dir, i, "txt", &io::grid_to_text(g))?);
            }
            manifest.labels = Some(s.labels);
            note(cli, &format!("{} members, swap in phase {}", s.grids.len(), s.swap_phase));
        }
        GenKind::GeodesicSeries { trees, frames } => {
            let (a, b) = (io::load_tree(&trees[0])?, io::load_tree(&trees[1])?);
            let series = synth::gen_geodesic_series(&a, &b, *frames)?;
            for (i, t) in series.iter().enumerate() {
                manifest.members.push(write_member(dir, i, "json", &io::tree_to_json(t))?);
            }
            manifest.times = Some((0..series.len()).collect());
        }
    }
    manifest.save(dir.join("manifest.json"))?;
    Ok(())
}

fn write_member(dir: &Path, i: usize, ext: &str, text: &str) -> Result<PathBuf, Failure> {
    let name = PathBuf::from(format!("member_{i:03}.{ext}"));
    write_file(&dir.join(&name), text)?;
    Ok(name)
}

/// Loads members in order; a manifest with time indices is sorted by time.
fn load_members(m: &Members) -> Result<(Vec<MergeTree>, Option<Manifest>), Failure> {
    let (files, manifest) = match (&m.manifest, m.files.is_empty()) {
        (Some(_), false) => return Err(Failure::Usage("give either member files or --manifest".into())),
        (None, true) => return Err(Failure::Usage("no members given".into())),
        (Some(path), true) => {
            let mut man = Manifest::load(path)?;
            if let Some(times) = man.times.clone() {
                let mut order: Vec<usize> = (0..times.len()).collect();
                order.sort_by_key(|&i| (times[i], i));
                man.members = order.iter().map(|&i| man.members[i].clone()).collect();
                man.labels = man.labels.map(|l| order.iter().map(|&i| l[i]).collect());
                man.times = Some(order.iter().map(|&i| times[i]).collect());
            }
            (man.members.clone(), Some(man))
        }
        (None, false) => (m.files.clone(), None),
    };
    let trees = files.iter().map(|f| load_member(f, m)).collect::<Result<Vec<_>, _>>()?;
    if let Some(first) = trees.first() {
        if trees.iter().any(|t| t.kind() != first.kind()) {
            return Err(Failure::Data("members mix split and join trees".into()));
        }
    }
    Ok((trees, manifest))
}

fn load_member(path: &Path, m: &Members) -> Result<MergeTree, Failure> {
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(io::load_tree(path)?);
    }
    let g = io::load_grid(path)?;
    let t = if m.join { join_tree(&g)? } else { split_tree(&g)? };
    Ok(simplify(&t, m.threshold)?)
}

fn trace_csv(energies: &[f64], sizes: Option<&[usize]>) -> String {
    match sizes {
        None => io::energy_csv(energies),
        Some(sizes) => {
            let mut out = String::from("iteration,energy,nodes\n");
            for (i, (e, s)) in energies.iter().zip(sizes).enumerate() {
                out.push_str(&format!("{i},{},{s}\n", io::fmt9(*e)));
            }
            out
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Outcome {
    match &cli.out {
        Some(path) => write_file(path, text),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Data(format!("standard output: {e}"))),
    }
}

fn note(cli: &Cli, msg: &str) {
    if !cli.quiet {
        eprintln!("{msg}");
    }
}
