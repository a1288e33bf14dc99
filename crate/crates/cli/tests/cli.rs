use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairsched_core::encoder::{self, EncodeOptions};
use fairsched_core::fixtures::tiny_seeds;
use fairsched_core::ilp;
use fairsched_core::io;
use fairsched_core::solver;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairsched"))
        .current_dir(dir)
        .args(args)
        .env_remove("FAIRSCHED_LOG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL: &[&str] = &[
    "generate", "--seed", "7", "--students", "12", "--courses", "8", "--instructors", "4", "--rooms", "8",
    "--frequency", "2", "--min-courses", "3", "--max-courses", "4",
];

fn generate_small(dir: &Path, name: &str) -> PathBuf {
    let out = run(dir, &[SMALL, &["--out", name]].concat());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join(name)
}

fn solve(dir: &Path, instance: &str, mode: &str, out: &str) -> Output {
    run(dir, &["solve", instance, "--mode", mode, "--time-limit", "30", "--threads", "1", "--out", out])
}

/// One course, instructor, student and room, one slot.
const SINGLE: &str = r#"{
  "version": 1, "weekdays": 1, "periods": 1,
  "courses": [{"id": "c1", "frequency": 1, "prerequisites": []}],
  "instructors": [{"id": "i1", "eligible": ["c1"], "min_units": 0, "max_units": 1}],
  "students": [{"id": "s1", "eligible": ["c1"], "min_courses": 1, "max_courses": 1,
                "interest": {"c1": 1.0}, "grades": {}}],
  "rooms": [{"id": "r1", "eligible": ["c1"], "min_cap": 0, "max_cap": 1}]
}"#;

#[test]
fn generate_and_solve_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = fs::read(generate_small(dir.path(), "a.json")).unwrap();
    let b = fs::read(generate_small(dir.path(), "b.json")).unwrap();
    assert_eq!(a, b);
    assert_eq!(code(&solve(dir.path(), "a.json", "fhssp-lex", "sa.json")), 0);
    assert_eq!(code(&solve(dir.path(), "a.json", "fhssp-lex", "sb.json")), 0);
    assert_eq!(fs::read(dir.path().join("sa.json")).unwrap(), fs::read(dir.path().join("sb.json")).unwrap());
}

#[test]
fn generate_flag_errors() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["generate", "--seed", "1", "--courses", "3", "--instructors", "1", "--rooms", "1", "--out", "x.json"]);
    assert_eq!(code(&out), 2);
    let out = run(dir.path(), &[SMALL, &["--min-courses", "5", "--max-courses", "2", "--out", "x.json"]].concat());
    assert_eq!(code(&out), 2);
    // Students need more courses than exist.
    let out = run(
        dir.path(),
        &["generate", "--seed", "1", "--students", "5", "--courses", "3", "--instructors", "2", "--rooms", "3",
          "--out", "x.json"],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn subsets_of_295_students() {
    let dir = TempDir::new().unwrap();
    let base = ["generate", "--seed", "3", "--students", "295", "--courses", "12", "--instructors", "6", "--rooms", "12"];
    let sizes = |prefix: &str| -> Vec<usize> {
        (1..=6)
            .map(|k| {
                let text = fs::read_to_string(dir.path().join(format!("{prefix}-{k}.json"))).unwrap();
                io::instance_from_json(&text).unwrap().students().len()
            })
            .collect()
    };
    assert_eq!(code(&run(dir.path(), &[&base[..], &["--subsets", "6", "--out", "even.json"]].concat())), 0);
    assert_eq!(sizes("even"), vec![49, 49, 49, 49, 49, 50]);
    let out = run(dir.path(), &[&base[..], &["--subset-sizes", "48,48,49,50,50,50", "--out", "table.json"]].concat());
    assert_eq!(code(&out), 0);
    assert_eq!(sizes("table"), vec![48, 48, 49, 50, 50, 50]);
    let out = run(dir.path(), &[&base[..], &["--subset-sizes", "48,48", "--out", "bad.json"]].concat());
    assert_eq!(code(&out), 2);
}

#[test]
fn single_instance_gets_one_assignment() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("one.json"), SINGLE).unwrap();
    let out = solve(dir.path(), "one.json", "hssp", "s.json");
    assert_eq!(code(&out), 0);
    let line = stdout(&out);
    let summary = io::Summary::parse(line.trim()).unwrap();
    assert_eq!(summary.assignments, 1);
    assert_eq!(summary.status, "optimal");
    assert_eq!(summary.setting, "one");
}

#[test]
fn lexicographic_envy_matches_oracle() {
    let dir = TempDir::new().unwrap();
    let opts = EncodeOptions::fhssp_lex();
    let mut checked = 0;
    for (seed, inst) in tiny_seeds(&opts, 14, 12) {
        let (m, cat) = encoder::build(&inst, &opts).unwrap();
        let want = solver::brute_force_lexicographic(&m, &encoder::secondary_objectives(&opts, &cat)).unwrap();
        let name = format!("t{seed}.json");
        fs::write(dir.path().join(&name), io::instance_to_json(&inst)).unwrap();
        let out = solve(dir.path(), &name, "fhssp-lex", "s.json");
        if want.status == solver::Status::Infeasible {
            assert_eq!(code(&out), 4);
            continue;
        }
        assert_eq!(code(&out), 0);
        let summary = io::Summary::parse(stdout(&out).trim()).unwrap();
        assert_eq!(summary.envy as i64, want.phase_objectives[1], "seed {seed}");
        assert_eq!(summary.assignments as i64, want.phase_objectives[0], "seed {seed}");
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn reduced_instance_has_no_envy() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["generate", "--seed", "2024", "--students", "25", "--courses", "12", "--instructors", "6", "--rooms", "12",
          "--frequency", "2", "--out", "r.json"],
    );
    assert_eq!(code(&out), 0);
    let out = solve(dir.path(), "r.json", "fhssp-lex", "s.json");
    assert_eq!(code(&out), 0);
    let summary = io::Summary::parse(stdout(&out).trim()).unwrap();
    assert_eq!(summary.envy, 0);
    assert_eq!(summary.students, 25);
    let audit = run(dir.path(), &["audit", "r.json", "s.json"]);
    assert_eq!(code(&audit), 0);
    assert_eq!(stdout(&audit).trim(), "count=0");
}

#[test]
fn infeasible_and_timeout_exit_codes() {
    let dir = TempDir::new().unwrap();
    // The only student needs a course no room can host.
    let broken = SINGLE.replace(r#""eligible": ["c1"], "min_cap""#, r#""eligible": [], "min_cap""#);
    fs::write(dir.path().join("none.json"), broken).unwrap();
    let out = solve(dir.path(), "none.json", "hssp", "s.json");
    assert_eq!(code(&out), 4, "{}", stdout(&out));
    assert!(!dir.path().join("s.json").exists());

    let out = run(
        dir.path(),
        &["generate", "--seed", "5", "--students", "60", "--courses", "12", "--instructors", "6", "--rooms", "12",
          "--out", "big.json"],
    );
    assert_eq!(code(&out), 0);
    let out = run(dir.path(), &["solve", "big.json", "--mode", "fhssp-lex", "--time-limit", "0.2", "--out", "s.json"]);
    assert_eq!(code(&out), 5, "{}", stdout(&out));
    assert!(stdout(&out).contains("status=timeout"));
}

#[test]
fn validate_pipeline_and_corruption() {
    let dir = TempDir::new().unwrap();
    generate_small(dir.path(), "i.json");
    assert_eq!(code(&solve(dir.path(), "i.json", "hssp", "s.json")), 0);
    let ok = run(dir.path(), &["validate", "i.json", "s.json"]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).starts_with("feasible=true"));

    let text = fs::read_to_string(dir.path().join("s.json")).unwrap();
    let mut doc = io::ScheduleDocument::from_json(&text).unwrap();
    doc.units.remove(0);
    fs::write(dir.path().join("cut.json"), doc.to_json()).unwrap();
    let bad = run(dir.path(), &["validate", "i.json", "cut.json"]);
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).contains("kind=LectureFrequency"));

    let mut doc = io::ScheduleDocument::from_json(&text).unwrap();
    let (c, i, _) = doc.assignments[0].clone();
    doc.assignments.push((c, i, "nobody".into()));
    fs::write(dir.path().join("ghost.json"), doc.to_json()).unwrap();
    let ghost = run(dir.path(), &["validate", "i.json", "ghost.json"]);
    assert_eq!(code(&ghost), 1);
    assert!(stdout(&ghost).contains("kind=Structural"));

    fs::write(dir.path().join("junk.json"), "{\"version\": 1}").unwrap();
    assert_eq!(code(&run(dir.path(), &["validate", "i.json", "junk.json"])), 2);
    assert_eq!(code(&run(dir.path(), &["audit", "i.json", "junk.json"])), 2);
}

#[test]
fn audit_reports_envy() {
    let dir = TempDir::new().unwrap();
    // s1 outranks s2 on x but holds nothing while s2 holds x.
    let inst = r#"{
      "version": 1, "weekdays": 1, "periods": 1,
      "courses": [{"id": "x", "frequency": 1, "prerequisites": []}],
      "instructors": [{"id": "i1", "eligible": ["x"], "min_units": 0, "max_units": 1}],
      "students": [
        {"id": "s1", "eligible": ["x"], "min_courses": 0, "max_courses": 1, "interest": {"x": 1.0}, "grades": {}},
        {"id": "s2", "eligible": ["x", "y"], "min_courses": 0, "max_courses": 1, "interest": {"x": 0.5, "y": 0.5}, "grades": {}}
      ],
      "rooms": [{"id": "r1", "eligible": ["x"], "min_cap": 0, "max_cap": 1}]
    }"#
    .replace(r#"[{"id": "x", "frequency": 1, "prerequisites": []}]"#,
             r#"[{"id": "x", "frequency": 1, "prerequisites": []}, {"id": "y", "frequency": 1, "prerequisites": []}]"#);
    fs::write(dir.path().join("i.json"), inst).unwrap();
    let sched = r#"{"version": 1, "lectures": [["x", "i1"]], "assignments": [["x", "i1", "s2"]],
                    "units": [["x", "i1", "r1", 0, 0]]}"#;
    fs::write(dir.path().join("s.json"), sched).unwrap();
    let out = run(dir.path(), &["audit", "i.json", "s.json"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("envy student=s1 envied=s2 witness=x"), "{text}");
    assert!(text.trim_end().ends_with("count=1"));
}

#[test]
fn export_round_trips() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("one.json"), SINGLE).unwrap();
    let out = run(dir.path(), &["export", "one.json", "--mode", "hssp", "--out", "m.lp"]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("m.lp")).unwrap();
    let parsed = ilp::parse_lp(&text).unwrap();
    let inst = io::instance_from_json(SINGLE).unwrap();
    let (m, _) = encoder::build(&inst, &EncodeOptions::hssp()).unwrap();
    let lin = m.linearize();
    assert_eq!(
        stdout(&out).trim(),
        format!("variables={} constraints={}", lin.num_vars(), lin.constraints().len())
    );
    assert_eq!(parsed.num_vars(), lin.num_vars());
    assert_eq!(parsed.constraints().len(), lin.constraints().len());
    // a, l, one u per room-slot, the student's course indicator, their unit attendance.
    assert_eq!(parsed.num_vars(), 5);

    generate_small(dir.path(), "i.json");
    for mode in ["fhssp-pure", "fhssp-lex"] {
        let out = run(dir.path(), &["export", "i.json", "--mode", mode, "--out", "f.lp"]);
        assert_eq!(code(&out), 0);
        let text = fs::read_to_string(dir.path().join("f.lp")).unwrap();
        let names = &text[text.find("\\ names").unwrap()..];
        assert!(names.contains("= alpha["), "{mode}");
        assert!(names.contains("= beta["), "{mode}");
        let parsed = ilp::parse_lp(&text).unwrap();
        assert!(stdout(&out).contains(&format!("variables={}", parsed.num_vars())));
    }
}

#[test]
fn ingest_requests() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("two.csv"), "student_id,course_id,rank\nA,math,1\nA,art,2\n").unwrap();
    let out = run(
        p,
        &["ingest", "two.csv", "--instructors", "1", "--min-courses", "1", "--max-courses", "2", "--extra-eligible", "0",
          "--frequency", "1", "--out", "g.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let inst = io::instance_from_json(&fs::read_to_string(p.join("g.json")).unwrap()).unwrap();
    let d = &inst.students()[0].interest;
    // Raw 1.0 and 0.5, normalized.
    assert!((d["math"] / d["art"] - 2.0).abs() < 1e-5);
    assert!((d["math"] + d["art"] - 1.0).abs() < 1e-9);

    fs::write(p.join("grades.csv"), "student_id,course_id,grade\nA,algebra,3.5\n").unwrap();
    let out = run(
        p,
        &["ingest", "two.csv", "--grades", "grades.csv", "--instructors", "1", "--min-courses", "1", "--max-courses", "2",
          "--frequency", "1", "--out", "h.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let inst = io::instance_from_json(&fs::read_to_string(p.join("h.json")).unwrap()).unwrap();
    assert_eq!(inst.students()[0].grades.get("algebra"), Some(&3.5));

    for (name, body) in [
        ("dup.csv", "student_id,course_id,rank\nA,math,1\nA,art,1\n"),
        ("same.csv", "student_id,course_id,rank\nA,math,1\nA,math,2\n"),
        ("empty.csv", "student_id,course_id,rank\n"),
        ("blank.csv", ""),
        ("rank.csv", "student_id,course_id,rank\nA,math,3\n"),
        ("text.csv", "student_id,course_id,rank\nA,math,first\n"),
        ("short.csv", "student_id,course_id,rank\nA,math\n"),
    ] {
        fs::write(p.join(name), body).unwrap();
        let out = run(p, &["ingest", name, "--instructors", "1", "--out", "x.json"]);
        assert_eq!(code(&out), 2, "{name}");
    }
}

#[test]
fn report_tables() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let empty = run(p, &["report"]);
    assert_eq!(code(&empty), 0);
    assert_eq!(stdout(&empty).lines().count(), 2);

    let out = run(p, &[SMALL, &["--subsets", "6", "--out", "set.json"]].concat());
    assert_eq!(code(&out), 0);
    let mut files = Vec::new();
    for k in 1..=6 {
        let out = run(p, &["solve", &format!("set-{k}.json"), "--mode", "fhssp-lex", "--setting", &k.to_string(), "--out", "s.json"]);
        assert_eq!(code(&out), 0);
        let name = format!("sum-{k}.txt");
        fs::write(p.join(&name), stdout(&out)).unwrap();
        files.push(name);
    }
    let one = run(p, &["report", &files[0]]);
    assert_eq!(stdout(&one).lines().count(), 3);
    let args: Vec<&str> = std::iter::once("report").chain(files.iter().map(String::as_str)).collect();
    let six = stdout(&run(p, &args));
    assert_eq!(six.lines().count(), 8);
    assert!(six.lines().nth(2).unwrap().starts_with("| 1 | 2 | "));
}
