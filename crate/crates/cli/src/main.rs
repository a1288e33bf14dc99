use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use fairsched_core::datagen::{self, GenError, GenSpec, StudentRequests};
use fairsched_core::encoder::{self, EncodeError, EncodeOptions};
use fairsched_core::ilp;
use fairsched_core::io::{self as docs, ScheduleDocument, ScheduleMeta, Summary};
use fairsched_core::model::Instance;
use fairsched_core::solver::{self, Branching, SolveConfig, Status};
use fairsched_core::validator::{validate_with, ValidateOptions};

/// Exit codes.
const USAGE: u8 = 2;
const INFEASIBLE_SPEC: u8 = 3;
const INFEASIBLE: u8 = 4;
const TIMEOUT: u8 = 5;

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure { code, error: error.into() }
    }
}

type Outcome = Result<u8, Failure>;

#[derive(Parser)]
#[command(name = "fairsched", version, about = "Course timetabling with envy-free student assignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance
    Generate(GenerateArgs),
    /// Solve an instance and write the schedule
    Solve(SolveArgs),
    /// Check a schedule against every hard constraint
    Validate(CheckArgs),
    /// List envious student pairs in a schedule
    Audit(AuditArgs),
    /// Write the 0-1 model in LP format
    Export(ExportArgs),
    /// Build an instance from a course request CSV
    Ingest(IngestArgs),
    /// Render solve summaries as a table
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct ShapeArgs {
    #[arg(long, default_value_t = 6)]
    periods: u32,
    #[arg(long, default_value_t = 5)]
    days: u32,
    #[arg(long, default_value_t = 5)]
    min_courses: u32,
    #[arg(long, default_value_t = 6)]
    max_courses: u32,
    /// Weekly meetings per lecture
    #[arg(long, default_value_t = 4)]
    frequency: u32,
    #[arg(long, default_value_t = 4)]
    max_instructor_courses: usize,
    #[arg(long, default_value_t = 30)]
    room_capacity: u32,
    #[arg(long, default_value_t = 0.3)]
    prerequisite_density: f64,
    /// Eligible courses per student beyond the course maximum
    #[arg(long, default_value_t = 2)]
    extra_eligible: usize,
}

impl ShapeArgs {
    fn apply(&self, spec: GenSpec) -> GenSpec {
        GenSpec {
            periods: self.periods,
            days: self.days,
            min_courses: self.min_courses,
            max_courses: self.max_courses,
            frequency: self.frequency,
            max_instructor_courses: self.max_instructor_courses,
            room_max_cap: self.room_capacity,
            prerequisite_density: self.prerequisite_density,
            extra_eligible: self.extra_eligible,
            ..spec
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    students: usize,
    #[arg(long)]
    courses: usize,
    #[arg(long)]
    instructors: usize,
    #[arg(long)]
    rooms: usize,
    #[command(flatten)]
    shape: ShapeArgs,
    /// Split students into this many balanced subsets, one file each
    #[arg(long, conflicts_with = "subset_sizes")]
    subsets: Option<usize>,
    /// Split students into subsets of these sizes, one file each
    #[arg(long, value_delimiter = ',')]
    subset_sizes: Option<Vec<usize>>,
    /// Output file; with subsets, files are named <stem>-<k>.json next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Hssp,
    FhsspPure,
    FhsspLex,
}

impl ModeArg {
    fn options(self) -> EncodeOptions {
        match self {
            ModeArg::Hssp => EncodeOptions::hssp(),
            ModeArg::FhsspPure => EncodeOptions::fhssp_pure(),
            ModeArg::FhsspLex => EncodeOptions::fhssp_lex(),
        }
    }
    fn name(self) -> &'static str {
        match self {
            ModeArg::Hssp => "hssp",
            ModeArg::FhsspPure => "fhssp-pure",
            ModeArg::FhsspLex => "fhssp-lex",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Activity,
    FirstUnassigned,
    Random,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "hssp")]
    mode: ModeArg,
    /// Let a lecture meet more than once a day
    #[arg(long)]
    allow_same_day: bool,
    /// Cap on units an instructor teaches per day
    #[arg(long)]
    per_day_bound: Option<u32>,
    /// Do not require enrolled students to attend every unit
    #[arg(long)]
    no_attendance: bool,
}

impl ModelArgs {
    fn options(&self) -> EncodeOptions {
        EncodeOptions {
            enforce_separate_days: !self.allow_same_day,
            per_day_instructor_bound: self.per_day_bound,
            attendance: !self.no_attendance,
            ..self.mode.options()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Seconds
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "activity")]
    branching: BranchArg,
    #[arg(long, default_value_t = 100_000)]
    log_every: u64,
    /// Label for the summary line; defaults to the instance file stem
    #[arg(long)]
    setting: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    instance: PathBuf,
    schedule: PathBuf,
    #[arg(long)]
    allow_same_day: bool,
    #[arg(long)]
    per_day_bound: Option<u32>,
}

#[derive(Args)]
struct AuditArgs {
    instance: PathBuf,
    schedule: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    instance: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// CSV with header student_id,course_id,rank
    requests: PathBuf,
    /// CSV with header student_id,course_id,grade
    #[arg(long)]
    grades: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    instructors: usize,
    /// Defaults to one room per course
    #[arg(long)]
    rooms: Option<usize>,
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    summaries: Vec<PathBuf>,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(|e| Failure::new(USAGE, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(|e| Failure::new(1, e))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    docs::instance_from_json(&read(path)?)
        .with_context(|| format!("loading instance {}", path.display()))
        .map_err(|e| Failure::new(USAGE, e))
}

fn load_schedule(path: &Path) -> Result<ScheduleDocument, Failure> {
    ScheduleDocument::from_json(&read(path)?)
        .with_context(|| format!("loading schedule {}", path.display()))
        .map_err(|e| Failure::new(USAGE, e))
}

fn gen_failure(e: GenError) -> Failure {
    let code = if matches!(e, GenError::InfeasibleSpec(_)) { INFEASIBLE_SPEC } else { USAGE };
    Failure::new(code, e)
}

fn encode_failure(e: EncodeError) -> Failure {
    let code = if matches!(e, EncodeError::EmptyEligibility { .. }) { INFEASIBLE } else { USAGE };
    Failure::new(code, e)
}

fn write_instances(out: &Path, parts: &[Instance]) -> Result<(), Failure> {
    if parts.len() == 1 {
        return write(out, &docs::instance_to_json(&parts[0]));
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
    for (k, part) in parts.iter().enumerate() {
        let path = out.with_file_name(format!("{stem}-{}.json", k + 1));
        write(&path, &docs::instance_to_json(part))?;
        println!("wrote {} students={}", path.display(), part.students().len());
    }
    Ok(())
}

fn split(instance: Instance, subsets: Option<usize>, sizes: Option<&[usize]>) -> Result<Vec<Instance>, Failure> {
    match (subsets, sizes) {
        (Some(k), _) => datagen::split_subsets(&instance, k).map_err(gen_failure),
        (None, Some(sizes)) => datagen::split_subsets_sized(&instance, sizes).map_err(gen_failure),
        (None, None) => Ok(vec![instance]),
    }
}

fn cmd_generate(a: GenerateArgs) -> Outcome {
    let spec = a.shape.apply(GenSpec::new(a.seed, a.students, a.courses, a.instructors, a.rooms));
    let instance = datagen::generate(&spec).map_err(gen_failure)?;
    for w in instance.warnings() {
        log::warn!("{w}");
    }
    write_instances(&a.out, &split(instance, a.subsets, a.subset_sizes.as_deref())?)?;
    Ok(0)
}

fn cmd_solve(a: SolveArgs) -> Outcome {
    let instance = load_instance(&a.instance)?;
    let options = a.model.options();
    let (model, catalog) = encoder::build(&instance, &options).map_err(encode_failure)?;
    log::info!("variables={} constraints={}", model.num_vars(), model.constraints().len());
    let config = SolveConfig {
        time_limit: a.time_limit,
        seed: a.seed,
        branching: match a.branching {
            BranchArg::Activity => Branching::Activity,
            BranchArg::FirstUnassigned => Branching::FirstUnassigned,
            BranchArg::Random => Branching::Random,
        },
        threads: a.threads,
        log_every: a.log_every,
    };
    let secondary = encoder::secondary_objectives(&options, &catalog);
    let out = solver::solve_lexicographic(&model, &secondary, &config).map_err(|e| Failure::new(USAGE, e))?;

    let schedule = out.best_assignment.as_ref().map(|x| encoder::decode(&instance, &catalog, x)).unwrap_or_default();
    let envy = instance.audit_envy(&schedule).map_err(|e| Failure::new(USAGE, e))?.count;
    let held = schedule.courses_by_student();
    let courses_per_student =
        instance.students().iter().map(|s| held.get(s.id.as_str()).map_or(0, |c| c.len())).min().unwrap_or(0);
    let summary = Summary {
        setting: a.setting.clone().unwrap_or_else(|| {
            a.instance.file_stem().and_then(|s| s.to_str()).unwrap_or("instance").to_string()
        }),
        status: out.status.as_str().to_string(),
        mode: a.model.mode.name().to_string(),
        students: instance.students().len(),
        courses_per_student,
        assignments: schedule.assignments.len(),
        envy,
        time_s: out.stats.wall_time.as_secs_f64(),
        nodes: out.stats.nodes,
        objective: out.objective,
    };
    if out.best_assignment.is_some() {
        let meta = ScheduleMeta {
            mode: summary.mode.clone(),
            status: summary.status.clone(),
            phase_objectives: out.phase_objectives.clone(),
            assignments: summary.assignments,
            envy,
            nodes: out.stats.nodes,
            propagations: out.stats.propagations,
        };
        write(&a.out, &ScheduleDocument::new(&schedule, meta).to_json())?;
    }
    println!("{summary}");
    Ok(match out.status {
        Status::Optimal | Status::Feasible => 0,
        Status::Infeasible => INFEASIBLE,
        Status::Timeout => TIMEOUT,
    })
}

fn cmd_validate(a: CheckArgs) -> Outcome {
    let instance = load_instance(&a.instance)?;
    let schedule = load_schedule(&a.schedule)?.schedule().map_err(|e| Failure::new(USAGE, e))?;
    let options = ValidateOptions { separate_days: !a.allow_same_day, per_day_instructor_bound: a.per_day_bound };
    let report = validate_with(&instance, &schedule, &options);
    print!("{}", report.to_text());
    Ok(if report.feasible { 0 } else { 1 })
}

fn cmd_audit(a: AuditArgs) -> Outcome {
    let instance = load_instance(&a.instance)?;
    let schedule = load_schedule(&a.schedule)?.schedule().map_err(|e| Failure::new(USAGE, e))?;
    let report = instance.audit_envy(&schedule).map_err(|e| Failure::new(USAGE, e))?;
    for p in &report.pairs {
        println!("envy student={} envied={} witness={}", p.student, p.envied, p.witness);
    }
    println!("count={}", report.count);
    Ok(if report.count == 0 { 0 } else { 1 })
}

fn cmd_export(a: ExportArgs) -> Outcome {
    let instance = load_instance(&a.instance)?;
    let options = a.model.options();
    let (mut model, catalog) = encoder::build(&instance, &options).map_err(encode_failure)?;
    if !encoder::secondary_objectives(&options, &catalog).is_empty() {
        // One objective that ranks solutions the same way as the two phases.
        model.set_objective(catalog.weighted_objective()).expect("catalog variables");
    }
    let linear = model.linearize();
    let text = ilp::export_lp_string(&linear).map_err(|e| Failure::new(1, e))?;
    write(&a.out, &text)?;
    println!("variables={} constraints={}", linear.num_vars(), linear.constraints().len());
    Ok(0)
}

#[derive(Deserialize)]
struct RequestRow {
    student_id: String,
    course_id: String,
    rank: u8,
}

#[derive(Deserialize)]
struct GradeRow {
    student_id: String,
    course_id: String,
    grade: f64,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(|e| Failure::new(USAGE, e))?;
    let mut rows = Vec::new();
    for (k, row) in reader.deserialize().enumerate() {
        rows.push(row.with_context(|| format!("{} row {}", path.display(), k + 1)).map_err(|e| Failure::new(USAGE, e))?);
    }
    Ok(rows)
}

fn cmd_ingest(a: IngestArgs) -> Outcome {
    let usage = |m: String| Failure::new(USAGE, anyhow::anyhow!(m));
    let rows: Vec<RequestRow> = read_csv(&a.requests)?;
    if rows.is_empty() {
        return Err(usage(format!("{} has no request rows", a.requests.display())));
    }
    let mut by_student: BTreeMap<String, StudentRequests> = BTreeMap::new();
    let mut courses = BTreeSet::new();
    for row in rows {
        let entry = by_student
            .entry(row.student_id.clone())
            .or_insert_with(|| StudentRequests { student: row.student_id.clone(), ..Default::default() });
        let slot = match row.rank {
            1 => &mut entry.first,
            2 => &mut entry.second,
            r => return Err(usage(format!("student {}: rank must be 1 or 2, got {r}", row.student_id))),
        };
        if slot.is_some() {
            return Err(usage(format!("student {} has two requests of rank {}", row.student_id, row.rank)));
        }
        *slot = Some(row.course_id.clone());
        if entry.first.is_some() && entry.first == entry.second {
            return Err(usage(format!("student {} requests {} twice", row.student_id, row.course_id)));
        }
        courses.insert(row.course_id);
    }
    let grades = match &a.grades {
        None => None,
        Some(path) => {
            let rows: Vec<GradeRow> = read_csv(path)?;
            let mut map = BTreeMap::new();
            for r in rows {
                courses.insert(r.course_id.clone());
                map.insert((r.student_id, r.course_id), r.grade);
            }
            Some(map)
        }
    };
    let course_ids: Vec<String> = courses.into_iter().collect();
    let requests: Vec<StudentRequests> = by_student.into_values().collect();
    let rooms = a.rooms.unwrap_or(course_ids.len());
    let spec = a.shape.apply(GenSpec::new(a.seed, requests.len(), course_ids.len(), a.instructors, rooms));
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let instance =
        datagen::build_instance(&spec, &course_ids, &requests, grades.as_ref(), &mut rng).map_err(gen_failure)?;
    write(&a.out, &docs::instance_to_json(&instance))?;
    println!("students={} courses={}", instance.students().len(), instance.courses().len());
    Ok(0)
}

fn cmd_report(a: ReportArgs) -> Outcome {
    let mut all = Vec::new();
    for path in &a.summaries {
        let text = read(path)?;
        all.extend(
            Summary::parse_all(&text)
                .with_context(|| format!("reading summaries from {}", path.display()))
                .map_err(|e| Failure::new(USAGE, e))?,
        );
    }
    print!("{}", docs::render_report(&all));
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FAIRSCHED_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Export(a) => cmd_export(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
