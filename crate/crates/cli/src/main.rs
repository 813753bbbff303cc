use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use colorcq::check::{check, check_random, Mutation, SchemaClass, Task};
use colorcq::engine::{JoinPlan, OpCounter};
use colorcq::generate;
use colorcq::text::{parse_database, parse_query, parse_schema};
use colorcq::{Database, Error, ExactCount, IndexedDatabase, Route};

const DEFAULT_BENCH_QUERY: &str = "Ans(x,y,z) :- E(x,y), E(y,z).";

#[derive(Parser)]
#[command(name = "colorcq", version, about = "Color-refinement index for free-connex acyclic conjunctive queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Bool,
    Count,
    Enum,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Bool => Task::Bool,
            TaskArg::Count => Task::Count,
            TaskArg::Enum => Task::Enum,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Auto,
    Direct,
    Binary,
    Arbitrary,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    All,
    Graph,
    Binary,
    Ternary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Cycle,
    Tree,
    Star,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index and print its size statistics.
    Index {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        route: RouteArg,
    },
    /// Evaluate a query on a stored index.
    Query {
        #[arg(long)]
        idx: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Compare the indexed path against the direct engine and the oracle,
    /// on one instance or on seeded random instances.
    Check {
        #[arg(long, requires_all = ["schema", "query"])]
        db: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        query: Option<PathBuf>,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random instances per schema class.
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, value_enum, default_value = "all")]
        class: ClassArg,
    },
    /// Time indexed and baseline preprocessing on generated graphs (CSV).
    Bench {
        #[arg(long, value_enum)]
        family: Family,
        /// Comma-separated sizes (tree heights for `tree`).
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Query file over `E/2`; defaults to a three-variable path.
        #[arg(long)]
        query: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Expected degree for the random family.
        #[arg(long, default_value_t = 3.0)]
        degree: f64,
    },
    /// Print the vertex coloring of a stored index.
    Dump {
        #[arg(long)]
        idx: PathBuf,
    },
}

enum Failure {
    Error(Error),
    CheckFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotFreeConnex
        | Error::NotAcyclic
        | Error::NotTree
        | Error::FreeNotConnected
        | Error::TaskMismatch(_)
        | Error::BudgetExceeded { .. } => 3,
        _ => 2,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        e => e,
    }
}

fn load_db(db: &Path, schema: &Path) -> Result<Database, Error> {
    let schema = parse_schema(&read(schema)?).map_err(|e| in_file(schema, e))?;
    let (db_data, _) = parse_database(&read(db)?, &schema).map_err(|e| in_file(db, e))?;
    Ok(db_data)
}

fn run(cmd: Command, out: &mut impl Write) -> Result<(), Failure> {
    match cmd {
        Command::Index {
            db,
            schema,
            out: path,
            route,
        } => {
            let data = load_db(&db, &schema)?;
            let route = match route {
                RouteArg::Auto => Route::for_database(&data),
                RouteArg::Direct => Route::Direct,
                RouteArg::Binary => Route::Binary,
                RouteArg::Arbitrary => Route::Arbitrary,
            };
            let idx = IndexedDatabase::build_with(&data, route)?;
            fs::write(&path, idx.write()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            writeln!(out, "{} route={}", idx.stats().line(), idx.route())?;
        }
        Command::Query {
            idx,
            query,
            task,
            limit,
        } => {
            let idx = IndexedDatabase::read(&read(&idx)?)?;
            let q = parse_query(&read(&query)?, idx.source_schema()).map_err(|e| in_file(&query, e))?;
            let ops = OpCounter::new();
            match Task::from(task) {
                Task::Bool => {
                    if !q.is_boolean() {
                        return Err(Error::TaskMismatch("bool needs a Boolean query".into()).into());
                    }
                    let yes = idx.eval_bool(&q, &ops)?;
                    writeln!(out, "{}", if yes { "yes" } else { "no" })?;
                }
                Task::Count => {
                    let n: ExactCount = idx.eval_count(&q, &ops)?;
                    writeln!(out, "{n}")?;
                }
                Task::Enum => {
                    let p = idx.prepare(&q, &ops)?;
                    let mut answers = p.enumerate(&ops);
                    let mut printed = 0;
                    let mut truncated = false;
                    loop {
                        if limit == Some(printed) {
                            truncated = answers.next().is_some();
                            break;
                        }
                        match answers.next() {
                            Some(t) => {
                                writeln!(out, "{}", idx.render_tuple(&t))?;
                                printed += 1;
                            }
                            None => break,
                        }
                    }
                    if !truncated {
                        writeln!(out, "EOE")?;
                    }
                }
            }
        }
        Command::Check {
            db,
            schema,
            query,
            task,
            seed,
            n,
            class,
        } => {
            let task = Task::from(task);
            let failure = match (db, schema, query) {
                (Some(db), Some(schema), Some(query)) => {
                    let data = load_db(&db, &schema)?;
                    let q = parse_query(&read(&query)?, data.schema()).map_err(|e| in_file(&query, e))?;
                    if task == Task::Bool && !q.is_boolean() {
                        return Err(Error::TaskMismatch("bool needs a Boolean query".into()).into());
                    }
                    check(&data, &q, task, Mutation::None)?
                }
                _ => {
                    let classes: Vec<SchemaClass> = match class {
                        ClassArg::All => SchemaClass::ALL.to_vec(),
                        ClassArg::Graph => vec![SchemaClass::Graph],
                        ClassArg::Binary => vec![SchemaClass::Binary],
                        ClassArg::Ternary => vec![SchemaClass::Ternary],
                    };
                    let rep = check_random(&classes, task, seed, n, Mutation::None)?;
                    if rep.failure.is_none() {
                        writeln!(out, "PASS ({} instances)", rep.instances)?;
                        return Ok(());
                    }
                    rep.failure
                }
            };
            match failure {
                None => writeln!(out, "PASS")?,
                Some(f) => {
                    writeln!(out, "FAIL")?;
                    write!(out, "{f}")?;
                    return Err(Failure::CheckFailed);
                }
            }
        }
        Command::Bench {
            family,
            sizes,
            query,
            seed,
            degree,
        } => {
            let src = match &query {
                Some(p) => read(p)?,
                None => DEFAULT_BENCH_QUERY.to_string(),
            };
            writeln!(
                out,
                "family,n,db_size,dl_size,vertices,colors,dcol_size,ratio,index_ms,indexed_ops,indexed_ms,baseline_ops,baseline_ms,count"
            )?;
            let name = match family {
                Family::Cycle => "cycle",
                Family::Tree => "tree",
                Family::Star => "star",
                Family::Random => "random",
            };
            for n in sizes {
                let data = match family {
                    Family::Cycle => generate::cycle(n),
                    Family::Tree => generate::binary_tree(n as u32),
                    Family::Star => generate::star(n),
                    Family::Random => {
                        let p = if n > 1 { (degree / (n - 1) as f64).min(1.0) } else { 0.0 };
                        generate::random_graph(n, p, 0.0, 0, seed)
                    }
                };
                let q = parse_query(&src, data.schema())?;
                let t = Instant::now();
                let idx = IndexedDatabase::build(&data)?;
                let index_ms = t.elapsed().as_secs_f64() * 1e3;
                let iops = OpCounter::new();
                let t = Instant::now();
                let prep = idx.prepare(&q, &iops)?;
                let indexed_ms = t.elapsed().as_secs_f64() * 1e3;
                let count: ExactCount = prep.count(&OpCounter::new());
                let bops = OpCounter::new();
                let t = Instant::now();
                JoinPlan::preprocess(&q, &data, &bops)?;
                let baseline_ms = t.elapsed().as_secs_f64() * 1e3;
                let s = idx.stats();
                writeln!(
                    out,
                    "{name},{n},{},{},{},{},{},{:.6},{index_ms:.3},{},{indexed_ms:.3},{},{baseline_ms:.3},{count}",
                    s.db_size,
                    s.dl_size,
                    s.vertices,
                    s.colors,
                    s.dcol_size,
                    s.ratio,
                    iops.get(),
                    bops.get()
                )?;
            }
        }
        Command::Dump { idx } => {
            let idx = IndexedDatabase::read(&read(&idx)?)?;
            let i = idx.index();
            write!(out, "{}", i.coloring().dump(i.dict()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(cli.command, &mut out);
    let flushed = out.flush();
    match result {
        Ok(()) => match flushed {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Err(Failure::CheckFailed) => ExitCode::from(4),
        Err(Failure::Error(Error::Io(m))) if m.contains("Broken pipe") => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
