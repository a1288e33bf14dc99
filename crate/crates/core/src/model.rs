//! Domain entities of the timetabling problem and the preference/fairness
//! semantics (degree of interest, priority, envy) defined over them.
//!
//! Everything here is independent of any integer-programming encoding. An
//! [`Instance`] is immutable once built and all queries are pure.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Interest vectors must sum to one within this tolerance.
pub const INTEREST_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("empty identifier in {kind}")]
    EmptyId { kind: &'static str },
    #[error("identifier {id:?} in {kind} contains a reserved character")]
    InvalidId { kind: &'static str, id: String },
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{owner} references unknown course {course:?}")]
    UnknownCourse { owner: String, course: String },
    #[error("unknown student {0:?}")]
    UnknownStudent(String),
    #[error("invalid time grid: {weekdays} weekdays x {periods} periods")]
    InvalidTimeGrid { weekdays: u32, periods: u32 },
    #[error("{owner}: lower bound {min} exceeds upper bound {max}")]
    InvalidBounds { owner: String, min: u32, max: u32 },
    #[error("course {course:?}: frequency {frequency} must be in 1..={weekdays}")]
    InvalidFrequency { course: String, frequency: u32, weekdays: u32 },
    #[error("student {student:?}: interest {value} for {course:?} outside [0, 1]")]
    InterestOutOfRange { student: String, course: String, value: f64 },
    #[error("student {student:?}: interest sums to {sum}, expected 1")]
    InterestNotNormalized { student: String, sum: f64 },
    #[error("student {student:?} has no grade for prerequisite {course:?}")]
    MissingGrade { student: String, course: String },
    #[error("student {student:?} is not eligible for course {course:?}")]
    NotEligible { student: String, course: String },
    #[error("every raw interest value is zero")]
    AllZeroInterest,
    #[error("raw interest for {course:?} is negative or not finite: {value}")]
    NegativeInterest { course: String, value: f64 },
    #[error("schedule references unknown {kind} {id:?}")]
    UnknownReference { kind: &'static str, id: String },
}

fn check_id(kind: &'static str, id: &str) -> Result<(), ModelError> {
    if id.is_empty() {
        return Err(ModelError::EmptyId { kind });
    }
    // variable names are built from ids with these separators
    if id.chars().any(|c| c.is_whitespace() || matches!(c, ',' | '[' | ']' | '|')) {
        return Err(ModelError::InvalidId { kind, id: id.to_string() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Course {
    pub id: String,
    /// Weekly lecture frequency `N_c`.
    pub frequency: u32,
    #[serde(default)]
    pub prerequisites: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instructor {
    pub id: String,
    pub eligible: BTreeSet<String>,
    /// Weekly unit range.
    pub min_units: u32,
    pub max_units: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Student {
    pub id: String,
    pub eligible: BTreeSet<String>,
    pub min_courses: u32,
    pub max_courses: u32,
    /// Degree of interest per course. Missing courses count as zero.
    #[serde(default)]
    pub interest: BTreeMap<String, f64>,
    /// Grades of courses already taken.
    #[serde(default)]
    pub grades: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub id: String,
    pub eligible: BTreeSet<String>,
    /// Per-unit attendance range.
    pub min_cap: u32,
    pub max_cap: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeSlot {
    pub day: u32,
    pub period: u32,
}

impl TimeSlot {
    pub fn new(day: u32, period: u32) -> Self {
        TimeSlot { day, period }
    }
}

/// A (course, instructor) pair. Students enroll in lectures, not courses.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Lecture {
    pub course: String,
    pub instructor: String,
}

impl Lecture {
    pub fn new(course: impl Into<String>, instructor: impl Into<String>) -> Self {
        Lecture { course: course.into(), instructor: instructor.into() }
    }
}

/// A scheduled meeting of a lecture in a room at a time slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Unit {
    pub lecture: Lecture,
    pub room: String,
    pub slot: TimeSlot,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub lecture: Lecture,
    pub student: String,
}

/// A weekly schedule: lectures `L`, lecture-student assignments `A` and units `U`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schedule {
    pub lectures: BTreeSet<Lecture>,
    pub assignments: BTreeSet<Assignment>,
    pub units: BTreeSet<Unit>,
}

impl Schedule {
    /// Courses held by every student that appears in `A`.
    pub fn courses_by_student(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for a in &self.assignments {
            out.entry(a.student.as_str()).or_default().insert(a.lecture.course.as_str());
        }
        out
    }

    pub fn courses_of(&self, student: &str) -> BTreeSet<&str> {
        self.assignments
            .iter()
            .filter(|a| a.student == student)
            .map(|a| a.lecture.course.as_str())
            .collect()
    }

    /// Referential integrity against an instance: every id is known and
    /// every assignment/unit points at a lecture of `L`.
    pub fn check_refs(&self, instance: &Instance) -> Result<(), ModelError> {
        let unknown = |kind, id: &str| ModelError::UnknownReference { kind, id: id.to_string() };
        let lecture_ok = |l: &Lecture| -> Result<(), ModelError> {
            if instance.course_index(&l.course).is_none() {
                return Err(unknown("course", &l.course));
            }
            if instance.instructor_index(&l.instructor).is_none() {
                return Err(unknown("instructor", &l.instructor));
            }
            Ok(())
        };
        for l in &self.lectures {
            lecture_ok(l)?;
        }
        for a in &self.assignments {
            lecture_ok(&a.lecture)?;
            if instance.student_index(&a.student).is_none() {
                return Err(unknown("student", &a.student));
            }
            if !self.lectures.contains(&a.lecture) {
                return Err(unknown("lecture", &format!("{},{}", a.lecture.course, a.lecture.instructor)));
            }
        }
        for u in &self.units {
            lecture_ok(&u.lecture)?;
            if instance.room_index(&u.room).is_none() {
                return Err(unknown("room", &u.room));
            }
            if !self.lectures.contains(&u.lecture) {
                return Err(unknown("lecture", &format!("{},{}", u.lecture.course, u.lecture.instructor)));
            }
        }
        Ok(())
    }
}

/// Ordered student pair `(s, s')` where `s` envies `s'`, with the smallest witness course.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EnvyPair {
    pub student: String,
    pub envied: String,
    pub witness: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvyReport {
    pub pairs: Vec<EnvyPair>,
    pub count: usize,
}

/// Schedule-independent part of the envy relation: `s` and `s'` are both
/// eligible for `course`, and `s` strictly dominates `s'` in both priority
/// and interest for it. Indices refer to the instance's entity vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EnvyTriple {
    pub student: usize,
    pub envied: usize,
    pub course: usize,
}

/// The full problem input.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    weekdays: u32,
    periods: u32,
    courses: Vec<Course>,
    instructors: Vec<Instructor>,
    students: Vec<Student>,
    rooms: Vec<Room>,
    course_ix: HashMap<String, usize>,
    instructor_ix: HashMap<String, usize>,
    student_ix: HashMap<String, usize>,
    room_ix: HashMap<String, usize>,
}

fn index_of<T>(
    kind: &'static str,
    items: &[T],
    id: impl Fn(&T) -> &str,
) -> Result<HashMap<String, usize>, ModelError> {
    let mut map = HashMap::with_capacity(items.len());
    for (k, item) in items.iter().enumerate() {
        let key = id(item);
        check_id(kind, key)?;
        if map.insert(key.to_string(), k).is_some() {
            return Err(ModelError::DuplicateId { kind, id: key.to_string() });
        }
    }
    Ok(map)
}

impl Instance {
    pub fn new(
        weekdays: u32,
        periods: u32,
        courses: Vec<Course>,
        instructors: Vec<Instructor>,
        students: Vec<Student>,
        rooms: Vec<Room>,
    ) -> Result<Self, ModelError> {
        if weekdays == 0 || periods == 0 {
            return Err(ModelError::InvalidTimeGrid { weekdays, periods });
        }
        let course_ix = index_of("course", &courses, |c| &c.id)?;
        let instructor_ix = index_of("instructor", &instructors, |i| &i.id)?;
        let student_ix = index_of("student", &students, |s| &s.id)?;
        let room_ix = index_of("room", &rooms, |r| &r.id)?;

        let known = |owner: &str, course: &str| -> Result<(), ModelError> {
            if course_ix.contains_key(course) {
                Ok(())
            } else {
                Err(ModelError::UnknownCourse { owner: owner.to_string(), course: course.to_string() })
            }
        };
        let bounds = |owner: &str, min: u32, max: u32| -> Result<(), ModelError> {
            if min > max {
                Err(ModelError::InvalidBounds { owner: owner.to_string(), min, max })
            } else {
                Ok(())
            }
        };

        for c in &courses {
            if c.frequency == 0 || c.frequency > weekdays {
                return Err(ModelError::InvalidFrequency {
                    course: c.id.clone(),
                    frequency: c.frequency,
                    weekdays,
                });
            }
            for p in &c.prerequisites {
                known(&c.id, p)?;
            }
        }
        for i in &instructors {
            bounds(&i.id, i.min_units, i.max_units)?;
            for c in &i.eligible {
                known(&i.id, c)?;
            }
        }
        for r in &rooms {
            bounds(&r.id, r.min_cap, r.max_cap)?;
            for c in &r.eligible {
                known(&r.id, c)?;
            }
        }
        for s in &students {
            bounds(&s.id, s.min_courses, s.max_courses)?;
            for c in s.eligible.iter().chain(s.grades.keys()) {
                known(&s.id, c)?;
            }
            let mut sum = 0.0;
            for (c, &v) in &s.interest {
                known(&s.id, c)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(ModelError::InterestOutOfRange {
                        student: s.id.clone(),
                        course: c.clone(),
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > INTEREST_SUM_TOLERANCE {
                return Err(ModelError::InterestNotNormalized { student: s.id.clone(), sum });
            }
        }

        Ok(Instance {
            weekdays,
            periods,
            courses,
            instructors,
            students,
            rooms,
            course_ix,
            instructor_ix,
            student_ix,
            room_ix,
        })
    }

    pub fn weekdays(&self) -> u32 {
        self.weekdays
    }
    pub fn periods(&self) -> u32 {
        self.periods
    }
    pub fn slot_count(&self) -> usize {
        (self.weekdays * self.periods) as usize
    }
    /// Dense slot index, day-major.
    pub fn slot_index(&self, slot: TimeSlot) -> usize {
        (slot.day * self.periods + slot.period) as usize
    }
    pub fn slot_at(&self, index: usize) -> TimeSlot {
        let index = index as u32;
        TimeSlot::new(index / self.periods, index % self.periods)
    }
    pub fn slots(&self) -> impl Iterator<Item = TimeSlot> + '_ {
        (0..self.slot_count()).map(|t| self.slot_at(t))
    }

    pub fn courses(&self) -> &[Course] {
        &self.courses
    }
    pub fn instructors(&self) -> &[Instructor] {
        &self.instructors
    }
    pub fn students(&self) -> &[Student] {
        &self.students
    }
    pub fn rooms(&self) -> &[Room] {
        &self.rooms
    }

    pub fn course_index(&self, id: &str) -> Option<usize> {
        self.course_ix.get(id).copied()
    }
    pub fn instructor_index(&self, id: &str) -> Option<usize> {
        self.instructor_ix.get(id).copied()
    }
    pub fn student_index(&self, id: &str) -> Option<usize> {
        self.student_ix.get(id).copied()
    }
    pub fn room_index(&self, id: &str) -> Option<usize> {
        self.room_ix.get(id).copied()
    }

    /// `d[s][c]`, zero where unspecified.
    pub fn interest(&self, student: usize, course: usize) -> f64 {
        let c = &self.courses[course].id;
        self.students[student].interest.get(c).copied().unwrap_or(0.0)
    }

    pub fn student_eligible(&self, student: usize, course: usize) -> bool {
        self.students[student].eligible.contains(&self.courses[course].id)
    }

    /// Non-fatal sanity findings, e.g. more required units than room-slots.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let demand: u64 = self.courses.iter().map(|c| c.frequency as u64).sum();
        let supply = self.rooms.len() as u64 * self.slot_count() as u64;
        if demand > supply {
            out.push(format!(
                "course frequencies need {demand} units but only {supply} room-slots exist"
            ));
        }
        for c in &self.courses {
            if !self.instructors.iter().any(|i| i.eligible.contains(&c.id)) {
                out.push(format!("course {} has no eligible instructor", c.id));
            }
            if !self.rooms.iter().any(|r| r.eligible.contains(&c.id)) {
                out.push(format!("course {} has no eligible room", c.id));
            }
        }
        out
    }

    /// Priority `p[s][c]`: the mean prerequisite grade, or the degree of
    /// interest when the course has no prerequisites.
    pub fn compute_priority(&self, student: usize, course: usize) -> Result<f64, ModelError> {
        let s = &self.students[student];
        let c = &self.courses[course];
        if !s.eligible.contains(&c.id) {
            return Err(ModelError::NotEligible { student: s.id.clone(), course: c.id.clone() });
        }
        if c.prerequisites.is_empty() {
            return Ok(self.interest(student, course));
        }
        let mut total = 0.0;
        for p in &c.prerequisites {
            let g = s.grades.get(p).ok_or_else(|| ModelError::MissingGrade {
                student: s.id.clone(),
                course: p.clone(),
            })?;
            total += g;
        }
        Ok(total / c.prerequisites.len() as f64)
    }

    /// Priority for every eligible (student, course) pair; `None` where ineligible.
    pub fn priorities(&self) -> Result<Vec<Vec<Option<f64>>>, ModelError> {
        let mut out = vec![vec![None; self.courses.len()]; self.students.len()];
        for (s, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                if self.student_eligible(s, c) {
                    *cell = Some(self.compute_priority(s, c)?);
                }
            }
        }
        Ok(out)
    }

    /// All ordered `(s, s', c)` with both students eligible for `c` and `s`
    /// strictly ahead of `s'` in priority and in interest. Sorted.
    pub fn envy_eligible_triples(&self) -> Result<Vec<EnvyTriple>, ModelError> {
        let p = self.priorities()?;
        let mut out = Vec::new();
        for s in 0..self.students.len() {
            for t in 0..self.students.len() {
                if s == t {
                    continue;
                }
                for c in 0..self.courses.len() {
                    let (Some(ps), Some(pt)) = (p[s][c], p[t][c]) else { continue };
                    if ps > pt && self.interest(s, c) > self.interest(t, c) {
                        out.push(EnvyTriple { student: s, envied: t, course: c });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Whether `student` envies `other` under `schedule`, with the
    /// lexicographically smallest witness course.
    pub fn is_envious(
        &self,
        schedule: &Schedule,
        student: &str,
        other: &str,
    ) -> Result<Option<String>, ModelError> {
        let s = self.student_index(student).ok_or_else(|| ModelError::UnknownStudent(student.into()))?;
        let t = self.student_index(other).ok_or_else(|| ModelError::UnknownStudent(other.into()))?;
        if s == t {
            return Ok(None);
        }
        let mine = schedule.courses_of(student);
        let theirs = schedule.courses_of(other);
        if mine.len() >= theirs.len() {
            return Ok(None);
        }
        let p = self.priorities()?;
        Ok(self.witness(&p, s, t, &mine, &theirs))
    }

    fn witness(
        &self,
        p: &[Vec<Option<f64>>],
        s: usize,
        t: usize,
        mine: &BTreeSet<&str>,
        theirs: &BTreeSet<&str>,
    ) -> Option<String> {
        // BTreeSet iteration yields course ids in lexicographic order
        theirs
            .iter()
            .filter(|c| !mine.contains(*c))
            .find(|c| {
                let Some(ci) = self.course_index(c) else { return false };
                match (p[s][ci], p[t][ci]) {
                    (Some(ps), Some(pt)) => ps > pt && self.interest(s, ci) > self.interest(t, ci),
                    _ => false,
                }
            })
            .map(|c| c.to_string())
    }

    /// Every envious ordered pair under `schedule`. Assignments naming
    /// unknown students or courses are ignored.
    pub fn audit_envy(&self, schedule: &Schedule) -> Result<EnvyReport, ModelError> {
        let p = self.priorities()?;
        let held = schedule.courses_by_student();
        let empty = BTreeSet::new();
        let mut pairs = Vec::new();
        for (s, st) in self.students.iter().enumerate() {
            let mine = held.get(st.id.as_str()).unwrap_or(&empty);
            for (t, other) in self.students.iter().enumerate() {
                if s == t {
                    continue;
                }
                let theirs = held.get(other.id.as_str()).unwrap_or(&empty);
                if mine.len() >= theirs.len() {
                    continue;
                }
                if let Some(w) = self.witness(&p, s, t, mine, theirs) {
                    pairs.push(EnvyPair { student: st.id.clone(), envied: other.id.clone(), witness: w });
                }
            }
        }
        let count = pairs.len();
        Ok(EnvyReport { pairs, count })
    }
}

/// Scales non-negative raw interest values so they sum to one.
pub fn normalize_interest(raw: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, ModelError> {
    for (c, &v) in raw {
        if !(v.is_finite() && v >= 0.0) {
            return Err(ModelError::NegativeInterest { course: c.clone(), value: v });
        }
    }
    let sum: f64 = raw.values().sum();
    if sum <= 0.0 {
        return Err(ModelError::AllZeroInterest);
    }
    Ok(raw.iter().map(|(c, v)| (c.clone(), v / sum)).collect())
}

#[cfg(test)]
mod tests {
    use crate::fixtures::*;
    use super::*;

    fn lecture(c: &str, i: &str) -> Lecture {
        Lecture::new(c, i)
    }

    fn assign(sched: &mut Schedule, c: &str, i: &str, s: &str) {
        sched.lectures.insert(lecture(c, i));
        sched.assignments.insert(Assignment { lecture: lecture(c, i), student: s.into() });
    }

    fn priority_instance(grades: &[(&str, f64)], prereqs: &[&str], d: f64) -> Instance {
        let mut courses = vec![course("c", 1, prereqs)];
        for p in prereqs {
            courses.push(course(p, 1, &[]));
        }
        let mut interest_ = vec![("c", d)];
        if d < 1.0 {
            interest_.push((prereqs.first().copied().unwrap_or("z"), 1.0 - d));
            if prereqs.is_empty() {
                courses.push(course("z", 1, &[]));
            }
        }
        let mut s = student("s", &["c"], 0, 1, &interest_);
        s.grades = grades.iter().map(|(c, g)| (c.to_string(), *g)).collect();
        Instance::new(5, 1, courses, vec![], vec![s], vec![]).unwrap()
    }

    #[test]
    fn priority_is_mean_of_prerequisite_grades() {
        let inst = priority_instance(&[("p1", 3.0), ("p2", 4.0)], &["p1", "p2"], 0.5);
        assert_eq!(inst.compute_priority(0, 0).unwrap(), 3.5);
        let inst = priority_instance(&[("p1", 2.7)], &["p1"], 0.5);
        assert_eq!(inst.compute_priority(0, 0).unwrap(), 2.7);
    }

    #[test]
    fn priority_without_prerequisites_is_interest() {
        let inst = priority_instance(&[], &[], 0.4);
        assert_eq!(inst.compute_priority(0, 0).unwrap(), 0.4);
    }

    #[test]
    fn priority_errors() {
        let inst = priority_instance(&[("p1", 3.0)], &["p1", "p2"], 0.5);
        assert!(matches!(inst.compute_priority(0, 0), Err(ModelError::MissingGrade { .. })));
        assert!(matches!(inst.compute_priority(0, 1), Err(ModelError::NotEligible { .. })));
    }

    #[test]
    fn normalize_examples() {
        let out = normalize_interest(&interest(&[("c1", 1.0), ("c2", 0.5), ("c3", 0.5)])).unwrap();
        assert_eq!(out, interest(&[("c1", 0.5), ("c2", 0.25), ("c3", 0.25)]));
        let out = normalize_interest(&interest(&[("c1", 1.0)])).unwrap();
        assert_eq!(out, interest(&[("c1", 1.0)]));
        let out = normalize_interest(&interest(&[("c1", 0.3), ("c2", 0.3)])).unwrap();
        assert_eq!(out, interest(&[("c1", 0.5), ("c2", 0.5)]));
        assert_eq!(
            normalize_interest(&interest(&[("c1", 0.0), ("c2", 0.0)])),
            Err(ModelError::AllZeroInterest)
        );
    }

    fn triple_instance(p: (f64, f64), d: (f64, f64)) -> Instance {
        let mut s1 = student("s1", &["c"], 0, 1, &[("c", d.0), ("p", 1.0 - d.0)]);
        let mut s2 = student("s2", &["c"], 0, 1, &[("c", d.1), ("p", 1.0 - d.1)]);
        s1.grades.insert("p".into(), p.0);
        s2.grades.insert("p".into(), p.1);
        Instance::new(1, 1, vec![course("c", 1, &["p"]), course("p", 1, &[])], vec![], vec![s1, s2], vec![])
            .unwrap()
    }

    #[test]
    fn triple_requires_both_strict_dominances() {
        let t = triple_instance((0.9, 0.7), (0.4, 0.2)).envy_eligible_triples().unwrap();
        assert_eq!(t, vec![EnvyTriple { student: 0, envied: 1, course: 0 }]);
        assert!(triple_instance((0.7, 0.7), (0.4, 0.2)).envy_eligible_triples().unwrap().is_empty());
        assert!(triple_instance((0.9, 0.7), (0.2, 0.4)).envy_eligible_triples().unwrap().is_empty());
    }

    #[test]
    fn triples_need_double_eligibility() {
        let mut inst = contested();
        // s2 loses eligibility for x: no triple may mention x
        let mut students = inst.students().to_vec();
        students[1].eligible.remove("x");
        inst = Instance::new(2, 1, inst.courses().to_vec(), inst.instructors().to_vec(), students, inst.rooms().to_vec())
            .unwrap();
        let x = inst.course_index("x").unwrap();
        assert!(inst.envy_eligible_triples().unwrap().iter().all(|t| t.course != x));
    }

    /// Five-course instance where s1 dominates s2 on course "c".
    fn five_course() -> Instance {
        let ids = ["a", "b", "c", "d", "e", "f"];
        let courses = ids.iter().map(|c| course(c, 1, &[])).collect();
        let eq = 1.0 / 6.0;
        let mut i1: Vec<(&str, f64)> = ids.iter().map(|c| (*c, eq)).collect();
        let mut i2 = i1.clone();
        i1[2].1 = eq + 0.05;
        i1[0].1 = eq - 0.05;
        i2[2].1 = eq - 0.05;
        i2[0].1 = eq + 0.05;
        Instance::new(
            5,
            1,
            courses,
            vec![instructor("i", &ids, 0, 30)],
            vec![student("s1", &ids, 0, 6, &i1), student("s2", &ids, 0, 6, &i2)],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn envy_requires_fewer_courses_and_missing_witness() {
        let inst = five_course();
        let mut sched = Schedule::default();
        for c in ["a", "b", "d", "e"] {
            assign(&mut sched, c, "i", "s1");
        }
        for c in ["a", "b", "c", "d", "e"] {
            assign(&mut sched, c, "i", "s2");
        }
        assert_eq!(inst.is_envious(&sched, "s1", "s2").unwrap(), Some("c".to_string()));
        assert_eq!(inst.is_envious(&sched, "s2", "s1").unwrap(), None);
        assert_eq!(inst.audit_envy(&sched).unwrap().count, 1);

        // equal course counts
        let mut equal = sched.clone();
        assign(&mut equal, "f", "i", "s1");
        assert_eq!(inst.is_envious(&equal, "s1", "s2").unwrap(), None);

        // s1 also holds c
        let mut both = sched.clone();
        both.assignments.retain(|a| !(a.student == "s1" && a.lecture.course == "e"));
        assign(&mut both, "c", "i", "s1");
        assign(&mut both, "f", "i", "s2");
        assert_eq!(inst.is_envious(&both, "s1", "s2").unwrap(), None);

        assert!(matches!(inst.is_envious(&sched, "s1", "nobody"), Err(ModelError::UnknownStudent(_))));
    }

    #[test]
    fn contested_seat_by_enumeration() {
        // hand oracle: enumerate every way of giving x/y to the two students
        let inst = contested();
        let options: [&[&str]; 4] = [&[], &["x"], &["y"], &["x", "y"]];
        for a in options {
            for b in options {
                let mut sched = Schedule::default();
                for c in a {
                    assign(&mut sched, c, "i1", "s1");
                }
                for c in b {
                    assign(&mut sched, c, "i1", "s2");
                }
                // s1 dominates s2 on x only (grade 4 > 2, interest 0.6 > 0.3);
                // s2 dominates s1 on y (no prerequisite: priority is interest, 0.7 > 0.4)
                let s1_envies = a.len() < b.len() && b.contains(&"x") && !a.contains(&"x");
                let s2_envies = b.len() < a.len() && a.contains(&"y") && !b.contains(&"y");
                let expected = s1_envies as usize + s2_envies as usize;
                assert_eq!(inst.audit_envy(&sched).unwrap().count, expected, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn empty_schedule_has_no_envy() {
        assert_eq!(contested().audit_envy(&Schedule::default()).unwrap().count, 0);
    }

    #[test]
    fn instance_rejects_bad_input() {
        let bad_sum = Instance::new(1, 1, vec![course("c", 1, &[])], vec![], vec![student("s", &["c"], 0, 1, &[("c", 0.5)])], vec![]);
        assert!(matches!(bad_sum, Err(ModelError::InterestNotNormalized { .. })));
        let dup = Instance::new(1, 1, vec![course("c", 1, &[]), course("c", 1, &[])], vec![], vec![], vec![]);
        assert!(matches!(dup, Err(ModelError::DuplicateId { .. })));
        let unknown = Instance::new(1, 1, vec![], vec![instructor("i", &["c"], 0, 1)], vec![], vec![]);
        assert!(matches!(unknown, Err(ModelError::UnknownCourse { .. })));
        let freq = Instance::new(2, 1, vec![course("c", 3, &[])], vec![], vec![], vec![]);
        assert!(matches!(freq, Err(ModelError::InvalidFrequency { .. })));
        let bounds = Instance::new(1, 1, vec![], vec![instructor("i", &[], 3, 1)], vec![], vec![]);
        assert!(matches!(bounds, Err(ModelError::InvalidBounds { .. })));
        let id = Instance::new(1, 1, vec![course("a,b", 1, &[])], vec![], vec![], vec![]);
        assert!(matches!(id, Err(ModelError::InvalidId { .. })));
    }

    #[test]
    fn supply_warning() {
        let inst = Instance::new(1, 1, vec![course("a", 1, &[]), course("b", 1, &[])], vec![], vec![], vec![room("r", &["a", "b"], 0, 1)])
            .unwrap();
        let w = inst.warnings();
        assert!(w.iter().any(|m| m.contains("room-slots")));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalized_sums_to_one(raw in proptest::collection::vec(0.0f64..10.0, 1..40)) {
                prop_assume!(raw.iter().any(|v| *v > 0.0));
                let map: BTreeMap<String, f64> = raw.iter().enumerate().map(|(k, v)| (format!("c{k}"), *v)).collect();
                let out = normalize_interest(&map).unwrap();
                let sum: f64 = out.values().sum();
                prop_assert!((sum - 1.0).abs() <= INTEREST_SUM_TOLERANCE);
                for (a, b) in map.iter().zip(map.iter().skip(1)) {
                    if a.1 > b.1 { prop_assert!(out[a.0] > out[b.0]); }
                    if a.1 < b.1 { prop_assert!(out[a.0] < out[b.0]); }
                }
            }

            #[test]
            fn priority_increases_with_prerequisite_grade(g1 in 0.0f64..4.0, g2 in 0.0f64..4.0, bump in 0.01f64..1.0) {
                let base = priority_instance(&[("p1", g1), ("p2", g2)], &["p1", "p2"], 0.5);
                let raised = priority_instance(&[("p1", g1 + bump), ("p2", g2)], &["p1", "p2"], 0.5);
                prop_assert!(raised.compute_priority(0, 0).unwrap() > base.compute_priority(0, 0).unwrap());
            }

            #[test]
            fn triples_antisymmetric(g in proptest::collection::vec(0.0f64..4.0, 3), d in proptest::collection::vec(0.0f64..1.0, 3)) {
                let mut students = Vec::new();
                for k in 0..3 {
                    let mut s = student(&format!("s{k}"), &["c"], 0, 1, &[("c", d[k]), ("p", 1.0 - d[k])]);
                    s.grades.insert("p".into(), g[k]);
                    students.push(s);
                }
                let inst = Instance::new(1, 1, vec![course("c", 1, &["p"]), course("p", 1, &[])], vec![], students, vec![]).unwrap();
                let triples = inst.envy_eligible_triples().unwrap();
                for t in &triples {
                    let rev = EnvyTriple { student: t.envied, envied: t.student, course: t.course };
                    prop_assert!(!triples.contains(&rev));
                }
            }
        }
    }
}
