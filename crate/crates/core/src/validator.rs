//! Feasibility checking of a decoded [`Schedule`] against an [`Instance`],
//! done directly on the set-based definitions and never through the 0-1
//! model. Every violation is collected; nothing fails fast.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Instance, Lecture, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    TimeConflict,
    Eligibility,
    InstructorUnits,
    StudentCourses,
    RoomCapacity,
    LectureFrequency,
    Structural,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subjects: Vec<String>,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, subjects: Vec<String>, detail: String) -> Self {
        debug_assert!(!subjects.is_empty());
        Violation { kind, subjects, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn of_kind(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.of_kind(kind).next().is_some()
    }

    /// Line-oriented rendering: a header line then one line per violation.
    pub fn to_text(&self) -> String {
        let mut out = format!("feasible={} violations={}\n", self.feasible, self.violations.len());
        for v in &self.violations {
            out.push_str(&format!(
                "violation kind={} subjects={} detail={:?}\n",
                v.kind,
                v.subjects.join(","),
                v.detail
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidateOptions {
    /// At most one unit per lecture per weekday.
    pub separate_days: bool,
    /// Optional cap on an instructor's units within a single weekday.
    pub per_day_instructor_bound: Option<u32>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { separate_days: true, per_day_instructor_bound: None }
    }
}

/// Index form of the resolvable part of a schedule.
struct Resolved {
    /// (course, instructor)
    lectures: BTreeSet<(usize, usize)>,
    /// (course, instructor, student)
    assignments: Vec<(usize, usize, usize)>,
    /// (course, instructor, room, slot index)
    units: Vec<(usize, usize, usize, usize)>,
    structural: Vec<Violation>,
}

fn lecture_name(l: &Lecture) -> String {
    format!("({},{})", l.course, l.instructor)
}

fn resolve(instance: &Instance, schedule: &Schedule) -> Resolved {
    use ViolationKind::Structural;
    let mut structural = Vec::new();
    let lecture = |l: &Lecture, structural: &mut Vec<Violation>| -> Option<(usize, usize)> {
        let c = instance.course_index(&l.course);
        let i = instance.instructor_index(&l.instructor);
        if c.is_none() {
            structural.push(Violation::new(Structural, vec![l.course.clone()], "unknown course".into()));
        }
        if i.is_none() {
            structural.push(Violation::new(Structural, vec![l.instructor.clone()], "unknown instructor".into()));
        }
        Some((c?, i?))
    };

    let mut lectures = BTreeSet::new();
    for l in &schedule.lectures {
        if let Some(key) = lecture(l, &mut structural) {
            lectures.insert(key);
        }
    }

    let mut assignments = Vec::new();
    for a in &schedule.assignments {
        let key = lecture(&a.lecture, &mut structural);
        let s = instance.student_index(&a.student);
        if s.is_none() {
            structural.push(Violation::new(Structural, vec![a.student.clone()], "unknown student".into()));
        }
        if !schedule.lectures.contains(&a.lecture) {
            structural.push(Violation::new(
                Structural,
                vec![a.student.clone(), a.lecture.course.clone(), a.lecture.instructor.clone()],
                format!("assignment to lecture {} which is not offered", lecture_name(&a.lecture)),
            ));
        }
        if let (Some((c, i)), Some(s)) = (key, s) {
            assignments.push((c, i, s));
        }
    }

    let mut units = Vec::new();
    for u in &schedule.units {
        let key = lecture(&u.lecture, &mut structural);
        let r = instance.room_index(&u.room);
        if r.is_none() {
            structural.push(Violation::new(Structural, vec![u.room.clone()], "unknown room".into()));
        }
        let slot_ok = u.slot.day < instance.weekdays() && u.slot.period < instance.periods();
        if !slot_ok {
            structural.push(Violation::new(
                Structural,
                vec![u.lecture.course.clone(), u.room.clone()],
                format!("time slot day {} period {} outside the weekly grid", u.slot.day, u.slot.period),
            ));
        }
        if !schedule.lectures.contains(&u.lecture) {
            structural.push(Violation::new(
                Structural,
                vec![u.lecture.course.clone(), u.lecture.instructor.clone(), u.room.clone()],
                format!("unit of lecture {} which is not offered", lecture_name(&u.lecture)),
            ));
        }
        if let (Some((c, i)), Some(r), true) = (key, r, slot_ok) {
            units.push((c, i, r, instance.slot_index(u.slot)));
        }
    }

    // one lecture per course per student
    let mut per_course: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(c, _, s) in &assignments {
        *per_course.entry((s, c)).or_default() += 1;
    }
    for ((s, c), n) in per_course {
        if n > 1 {
            structural.push(Violation::new(
                Structural,
                vec![instance.students()[s].id.clone(), instance.courses()[c].id.clone()],
                format!("enrolled in {n} lectures of the same course"),
            ));
        }
    }

    Resolved { lectures, assignments, units, structural }
}

impl Resolved {
    /// Lectures each student attends.
    fn enrolled(&self, students: usize) -> Vec<BTreeSet<(usize, usize)>> {
        let mut out = vec![BTreeSet::new(); students];
        for &(c, i, s) in &self.assignments {
            out[s].insert((c, i));
        }
        out
    }
}

/// No student, instructor or room may be in two units at the same time slot.
pub fn check_time_conflicts(instance: &Instance, schedule: &Schedule) -> Vec<Violation> {
    time_conflicts(instance, &resolve(instance, schedule))
}

fn time_conflicts(instance: &Instance, res: &Resolved) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut emit = |who: &str, t: usize, n: usize| {
        let slot = instance.slot_at(t);
        out.push(Violation::new(
            ViolationKind::TimeConflict,
            vec![who.to_string()],
            format!("{n} units at day {} period {}", slot.day, slot.period),
        ));
    };

    let mut by_lecture: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for &(c, i, _, t) in &res.units {
        by_lecture.entry((c, i)).or_default().push(t);
    }

    for (s, lectures) in res.enrolled(instance.students().len()).iter().enumerate() {
        let mut count: BTreeMap<usize, usize> = BTreeMap::new();
        for l in lectures {
            for &t in by_lecture.get(l).map(Vec::as_slice).unwrap_or(&[]) {
                *count.entry(t).or_default() += 1;
            }
        }
        for (t, n) in count {
            if n >= 2 {
                emit(&instance.students()[s].id, t, n);
            }
        }
    }

    let mut inst_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut room_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(_, i, r, t) in &res.units {
        *inst_count.entry((i, t)).or_default() += 1;
        *room_count.entry((r, t)).or_default() += 1;
    }
    for ((i, t), n) in inst_count {
        if n >= 2 {
            emit(&instance.instructors()[i].id, t, n);
        }
    }
    for ((r, t), n) in room_count {
        if n >= 2 {
            emit(&instance.rooms()[r].id, t, n);
        }
    }
    out
}

/// Every course held by a student, taught by an instructor or hosted in a
/// room must be in that entity's eligible set.
pub fn check_eligibility(instance: &Instance, schedule: &Schedule) -> Vec<Violation> {
    eligibility(instance, &resolve(instance, schedule))
}

fn eligibility(instance: &Instance, res: &Resolved) -> Vec<Violation> {
    let mut out = Vec::new();
    let courses = instance.courses();
    let mut emit = |who: &str, what: &str, c: usize| {
        out.push(Violation::new(
            ViolationKind::Eligibility,
            vec![who.to_string(), courses[c].id.clone()],
            format!("{what} {who} is not eligible for course {}", courses[c].id),
        ));
    };

    let held: BTreeSet<(usize, usize)> = res.assignments.iter().map(|&(c, _, s)| (s, c)).collect();
    for (s, c) in held {
        let st = &instance.students()[s];
        if !st.eligible.contains(&courses[c].id) {
            emit(&st.id, "student", c);
        }
    }
    for &(c, i) in &res.lectures {
        let ins = &instance.instructors()[i];
        if !ins.eligible.contains(&courses[c].id) {
            emit(&ins.id, "instructor", c);
        }
    }
    let hosted: BTreeSet<(usize, usize)> = res.units.iter().map(|&(c, _, r, _)| (r, c)).collect();
    for (r, c) in hosted {
        let room = &instance.rooms()[r];
        if !room.eligible.contains(&courses[c].id) {
            emit(&room.id, "room", c);
        }
    }
    out
}

/// Weekly instructor units, per-student course counts and per-unit room
/// attendance must lie within their ranges.
pub fn check_numeric_bounds(instance: &Instance, schedule: &Schedule) -> Vec<Violation> {
    numeric_bounds(instance, &resolve(instance, schedule), None)
}

fn numeric_bounds(instance: &Instance, res: &Resolved, per_day: Option<u32>) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut units_of = vec![0u32; instance.instructors().len()];
    let mut daily: BTreeMap<(usize, u32), u32> = BTreeMap::new();
    for &(_, i, _, t) in &res.units {
        units_of[i] += 1;
        *daily.entry((i, instance.slot_at(t).day)).or_default() += 1;
    }
    for (ins, &n) in instance.instructors().iter().zip(&units_of) {
        if n < ins.min_units || n > ins.max_units {
            out.push(Violation::new(
                ViolationKind::InstructorUnits,
                vec![ins.id.clone()],
                format!("teaches {n} units, allowed {}..={}", ins.min_units, ins.max_units),
            ));
        }
    }
    if let Some(cap) = per_day {
        for ((i, day), n) in daily {
            if n > cap {
                out.push(Violation::new(
                    ViolationKind::InstructorUnits,
                    vec![instance.instructors()[i].id.clone()],
                    format!("teaches {n} units on day {day}, allowed {cap}"),
                ));
            }
        }
    }

    let mut courses_of = vec![BTreeSet::new(); instance.students().len()];
    for &(c, _, s) in &res.assignments {
        courses_of[s].insert(c);
    }
    for (st, held) in instance.students().iter().zip(&courses_of) {
        let n = held.len() as u32;
        if n < st.min_courses || n > st.max_courses {
            out.push(Violation::new(
                ViolationKind::StudentCourses,
                vec![st.id.clone()],
                format!("takes {n} courses, allowed {}..={}", st.min_courses, st.max_courses),
            ));
        }
    }

    let mut attendance: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for &(c, i, _) in &res.assignments {
        *attendance.entry((c, i)).or_default() += 1;
    }
    for &(c, i, r, t) in &res.units {
        let room = &instance.rooms()[r];
        let n = attendance.get(&(c, i)).copied().unwrap_or(0);
        if n < room.min_cap || n > room.max_cap {
            let slot = instance.slot_at(t);
            out.push(Violation::new(
                ViolationKind::RoomCapacity,
                vec![room.id.clone(), instance.courses()[c].id.clone()],
                format!(
                    "unit at day {} period {} has {n} students, allowed {}..={}",
                    slot.day, slot.period, room.min_cap, room.max_cap
                ),
            ));
        }
    }
    out
}

/// Each offered lecture meets exactly `N_c` times a week, at most once per day.
pub fn check_lecture_frequency(instance: &Instance, schedule: &Schedule) -> Vec<Violation> {
    lecture_frequency(instance, &resolve(instance, schedule), true)
}

fn lecture_frequency(instance: &Instance, res: &Resolved, separate_days: bool) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut per_lecture: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for &(c, i, _, t) in &res.units {
        per_lecture.entry((c, i)).or_default().push(t);
    }
    for &(c, i) in &res.lectures {
        let course = &instance.courses()[c];
        let ins = &instance.instructors()[i];
        let slots = per_lecture.get(&(c, i)).map(Vec::as_slice).unwrap_or(&[]);
        if slots.len() as u32 != course.frequency {
            out.push(Violation::new(
                ViolationKind::LectureFrequency,
                vec![course.id.clone(), ins.id.clone()],
                format!("meets {} times a week, required {}", slots.len(), course.frequency),
            ));
        }
        if separate_days {
            let mut days: BTreeMap<u32, usize> = BTreeMap::new();
            for &t in slots {
                *days.entry(instance.slot_at(t).day).or_default() += 1;
            }
            for (day, n) in days {
                if n > 1 {
                    out.push(Violation::new(
                        ViolationKind::LectureFrequency,
                        vec![course.id.clone(), ins.id.clone()],
                        format!("meets {n} times on day {day}"),
                    ));
                }
            }
        }
    }
    out
}

pub fn validate(instance: &Instance, schedule: &Schedule) -> ValidationReport {
    validate_with(instance, schedule, &ValidateOptions::default())
}

pub fn validate_with(instance: &Instance, schedule: &Schedule, options: &ValidateOptions) -> ValidationReport {
    let mut res = resolve(instance, schedule);
    let mut violations = std::mem::take(&mut res.structural);
    violations.extend(time_conflicts(instance, &res));
    violations.extend(eligibility(instance, &res));
    violations.extend(numeric_bounds(instance, &res, options.per_day_instructor_bound));
    violations.extend(lecture_frequency(instance, &res, options.separate_days));
    ValidationReport { feasible: violations.is_empty(), violations }
}
