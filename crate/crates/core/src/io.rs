//! Versioned JSON documents and the one-line run summary.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Assignment, Course, Instance, Instructor, Lecture, ModelError, Room, Schedule, Student, TimeSlot, Unit};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported document version {0}, expected {FORMAT_VERSION}")]
    Version(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("malformed summary line: {0}")]
    Summary(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub version: u32,
    pub weekdays: u32,
    pub periods: u32,
    pub courses: Vec<Course>,
    pub instructors: Vec<Instructor>,
    pub students: Vec<Student>,
    pub rooms: Vec<Room>,
}

impl InstanceDocument {
    pub fn from_instance(instance: &Instance) -> Self {
        InstanceDocument {
            version: FORMAT_VERSION,
            weekdays: instance.weekdays(),
            periods: instance.periods(),
            courses: instance.courses().to_vec(),
            instructors: instance.instructors().to_vec(),
            students: instance.students().to_vec(),
            rooms: instance.rooms().to_vec(),
        }
    }

    pub fn into_instance(self) -> Result<Instance, DocError> {
        if self.version != FORMAT_VERSION {
            return Err(DocError::Version(self.version));
        }
        Ok(Instance::new(self.weekdays, self.periods, self.courses, self.instructors, self.students, self.rooms)?)
    }
}

pub fn instance_to_json(instance: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceDocument::from_instance(instance)).expect("serializable");
    s.push('\n');
    s
}

pub fn instance_from_json(text: &str) -> Result<Instance, DocError> {
    serde_json::from_str::<InstanceDocument>(text)?.into_instance()
}

/// Run details stored with a schedule. Wall time is left out so that
/// repeated runs write identical files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleMeta {
    pub mode: String,
    pub status: String,
    pub phase_objectives: Vec<i64>,
    pub assignments: usize,
    pub envy: usize,
    pub nodes: u64,
    pub propagations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDocument {
    pub version: u32,
    /// (course, instructor)
    pub lectures: Vec<(String, String)>,
    /// (course, instructor, student)
    pub assignments: Vec<(String, String, String)>,
    /// (course, instructor, room, day, period)
    pub units: Vec<(String, String, String, u32, u32)>,
    #[serde(default)]
    pub meta: ScheduleMeta,
}

impl ScheduleDocument {
    pub fn new(schedule: &Schedule, meta: ScheduleMeta) -> Self {
        ScheduleDocument {
            version: FORMAT_VERSION,
            lectures: schedule.lectures.iter().map(|l| (l.course.clone(), l.instructor.clone())).collect(),
            assignments: schedule
                .assignments
                .iter()
                .map(|a| (a.lecture.course.clone(), a.lecture.instructor.clone(), a.student.clone()))
                .collect(),
            units: schedule
                .units
                .iter()
                .map(|u| (u.lecture.course.clone(), u.lecture.instructor.clone(), u.room.clone(), u.slot.day, u.slot.period))
                .collect(),
            meta,
        }
    }

    pub fn schedule(&self) -> Result<Schedule, DocError> {
        if self.version != FORMAT_VERSION {
            return Err(DocError::Version(self.version));
        }
        let mut s = Schedule::default();
        s.lectures.extend(self.lectures.iter().map(|(c, i)| Lecture::new(c.clone(), i.clone())));
        s.assignments.extend(
            self.assignments
                .iter()
                .map(|(c, i, st)| Assignment { lecture: Lecture::new(c.clone(), i.clone()), student: st.clone() }),
        );
        s.units.extend(self.units.iter().map(|(c, i, r, d, p)| Unit {
            lecture: Lecture::new(c.clone(), i.clone()),
            room: r.clone(),
            slot: TimeSlot::new(*d, *p),
        }));
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, DocError> {
        let doc: ScheduleDocument = serde_json::from_str(text)?;
        if doc.version != FORMAT_VERSION {
            return Err(DocError::Version(doc.version));
        }
        Ok(doc)
    }
}

/// One solve, as printed by the CLI: space-separated `key=value` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub setting: String,
    pub status: String,
    pub mode: String,
    pub students: usize,
    /// Fewest courses held by any student.
    pub courses_per_student: usize,
    pub assignments: usize,
    pub envy: usize,
    pub time_s: f64,
    pub nodes: u64,
    pub objective: Option<i64>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "setting={} status={} mode={} students={} courses_per_student={} assignments={} envy={} time_s={:.3} nodes={} objective={}",
            self.setting,
            self.status,
            self.mode,
            self.students,
            self.courses_per_student,
            self.assignments,
            self.envy,
            self.time_s,
            self.nodes,
            self.objective.map_or("none".to_string(), |o| o.to_string())
        )
    }
}

impl Summary {
    pub fn parse(line: &str) -> Result<Summary, DocError> {
        let bad = |m: &str| DocError::Summary(format!("{m}: {line:?}"));
        let mut kv = BTreeMap::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad("token without '='"))?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
        fn num<T: std::str::FromStr>(v: &str, k: &str, line: &str) -> Result<T, DocError> {
            v.parse().map_err(|_| DocError::Summary(format!("bad {k}: {line:?}")))
        }
        Ok(Summary {
            setting: get("setting")?.to_string(),
            status: get("status")?.to_string(),
            mode: get("mode")?.to_string(),
            students: num(get("students")?, "students", line)?,
            courses_per_student: num(get("courses_per_student")?, "courses_per_student", line)?,
            assignments: num(get("assignments")?, "assignments", line)?,
            envy: num(get("envy")?, "envy", line)?,
            time_s: num(get("time_s")?, "time_s", line)?,
            nodes: num(get("nodes")?, "nodes", line)?,
            objective: match get("objective")? {
                "none" => None,
                v => Some(num(v, "objective", line)?),
            },
        })
    }

    /// Every summary line in `text`; other lines are skipped.
    pub fn parse_all(text: &str) -> Result<Vec<Summary>, DocError> {
        text.lines().filter(|l| l.trim_start().starts_with("setting=")).map(Summary::parse).collect()
    }
}

/// Markdown table with one row per summary.
pub fn render_report(summaries: &[Summary]) -> String {
    let mut out = String::from(
        "| Problem setting | Number of students | Number of courses | Number of student envy | Solver time |\n\
         |---|---|---|---|---|\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {:.1}s |\n",
            s.setting, s.students, s.courses_per_student, s.envy, s.time_s
        ));
    }
    out
}
