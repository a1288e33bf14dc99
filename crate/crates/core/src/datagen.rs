//! Seeded synthetic instances: dedicated rooms per course, instructors with a
//! bounded teaching portfolio, students with two ranked requests and noisy
//! interest in everything else.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::model::{Course, Instance, Instructor, ModelError, Room, Student};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator settings: {0}")]
    InvalidSpec(String),
    #[error("settings cannot produce a feasible instance: {0}")]
    InfeasibleSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub students: usize,
    pub courses: usize,
    pub instructors: usize,
    pub rooms: usize,
    pub periods: u32,
    pub days: u32,
    pub min_courses: u32,
    pub max_courses: u32,
    pub max_instructor_courses: usize,
    pub frequency: u32,
    /// Fraction of courses with prerequisites.
    pub prerequisite_density: f64,
    pub grade_max: f64,
    pub noise_mean: f64,
    pub noise_sd: f64,
    pub noise_max: f64,
    /// Ranked requests per student, at most two.
    pub requests: usize,
    /// Eligible courses beyond the course maximum.
    pub extra_eligible: usize,
    pub room_min_cap: u32,
    pub room_max_cap: u32,
}

impl GenSpec {
    pub fn new(seed: u64, students: usize, courses: usize, instructors: usize, rooms: usize) -> Self {
        GenSpec {
            seed,
            students,
            courses,
            instructors,
            rooms,
            periods: 6,
            days: 5,
            min_courses: 5,
            max_courses: 6,
            max_instructor_courses: 4,
            frequency: 4,
            prerequisite_density: 0.3,
            grade_max: 4.0,
            noise_mean: 0.25,
            noise_sd: 0.1,
            noise_max: 0.5,
            requests: 2,
            extra_eligible: 2,
            room_min_cap: 0,
            room_max_cap: 30,
        }
    }

    /// Full-size setting: 295 students, 121 courses, 72 instructors, 106 rooms.
    pub fn full_scale(seed: u64) -> Self {
        GenSpec::new(seed, 295, 121, 72, 106)
    }

    fn check(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidSpec(m));
        if self.students == 0 || self.courses == 0 || self.instructors == 0 || self.rooms == 0 {
            return bad("entity counts must be at least 1".into());
        }
        if self.periods == 0 || self.days == 0 {
            return bad("periods and days must be at least 1".into());
        }
        if self.frequency == 0 || self.frequency > self.days {
            return bad(format!("frequency {} must lie in 1..={}", self.frequency, self.days));
        }
        if self.min_courses > self.max_courses {
            return bad(format!("course range {}..{} is empty", self.min_courses, self.max_courses));
        }
        if self.room_min_cap > self.room_max_cap {
            return bad(format!("capacity range {}..{} is empty", self.room_min_cap, self.room_max_cap));
        }
        if self.max_instructor_courses == 0 {
            return bad("instructors must be able to teach at least one course".into());
        }
        if self.instructors * self.max_instructor_courses < self.courses {
            return bad(format!(
                "{} instructors with {} courses each cannot cover {} courses",
                self.instructors, self.max_instructor_courses, self.courses
            ));
        }
        if self.requests > 2 {
            return bad("at most two ranked requests per student".into());
        }
        if !(0.0..=1.0).contains(&self.prerequisite_density) {
            return bad("prerequisite density must lie in [0, 1]".into());
        }
        if !(self.noise_sd > 0.0 && self.noise_max > 0.0 && self.grade_max >= 0.0) {
            return bad("noise and grade parameters must be positive".into());
        }
        if self.min_courses as usize > self.courses {
            return Err(GenError::InfeasibleSpec(format!(
                "students need {} courses but only {} exist",
                self.min_courses, self.courses
            )));
        }
        Ok(())
    }
}

fn ids(prefix: &str, width: usize, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k:0width$}")).collect()
}

/// Raw interest before normalization: 1.0 for the first request, 0.5 for
/// the second, truncated normal noise for every other course.
pub fn raw_interest(
    spec: &GenSpec,
    courses: &[String],
    requests: &StudentRequests,
    rng: &mut impl Rng,
) -> BTreeMap<String, f64> {
    let noise = Normal::new(spec.noise_mean, spec.noise_sd).expect("positive sd");
    courses
        .iter()
        .map(|c| {
            let v = match c {
                c if requests.first.as_ref() == Some(c) => 1.0,
                c if requests.second.as_ref() == Some(c) => 0.5,
                _ => loop {
                    let x: f64 = noise.sample(rng);
                    if (0.0..=spec.noise_max).contains(&x) {
                        break x;
                    }
                },
            };
            (c.clone(), v)
        })
        .collect()
}

/// Normalizes to sum one and rounds to six decimals, distributing the
/// rounding so the micro-units still sum to exactly one million.
pub fn quantize_interest(raw: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, ModelError> {
    let norm = crate::model::normalize_interest(raw)?;
    const SCALE: f64 = 1e6;
    let mut units: Vec<(String, i64, f64)> = norm
        .iter()
        .map(|(c, &v)| {
            let x = v * SCALE;
            (c.clone(), x.floor() as i64, x - x.floor())
        })
        .collect();
    let short = SCALE as i64 - units.iter().map(|u| u.1).sum::<i64>();
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| units[b].2.total_cmp(&units[a].2).then(a.cmp(&b)));
    for &k in order.iter().take(short.max(0) as usize) {
        units[k].1 += 1;
    }
    Ok(units.into_iter().map(|(c, n, _)| (c, n as f64 / SCALE)).collect())
}

fn grade(spec: &GenSpec, rng: &mut impl Rng) -> f64 {
    (rng.random_range(0.0..=spec.grade_max) * 100.0).round() / 100.0
}

/// First and second choice of one student.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudentRequests {
    pub student: String,
    pub first: Option<String>,
    pub second: Option<String>,
}

impl StudentRequests {
    pub fn courses(&self) -> impl Iterator<Item = &String> {
        self.first.iter().chain(self.second.iter())
    }
}

/// Builds an instance around the given students and requests, synthesizing
/// everything else from `spec`. Supplied `grades` are copied into each
/// student's record; prerequisites without one get a random grade.
pub fn build_instance(
    spec: &GenSpec,
    course_ids: &[String],
    requests: &[StudentRequests],
    grades: Option<&BTreeMap<(String, String), f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<Instance, GenError> {
    let nc = course_ids.len();
    let spec = &GenSpec { courses: nc, students: requests.len(), ..spec.clone() };
    spec.check()?;

    // Prerequisites only point to lower-index courses, so the graph is acyclic.
    let mut courses = Vec::with_capacity(nc);
    for (k, id) in course_ids.iter().enumerate() {
        let mut prerequisites = Vec::new();
        if k > 0 && rng.random_bool(spec.prerequisite_density) {
            let count = rng.random_range(1..=2usize).min(k);
            let mut picked: Vec<usize> = rand::seq::index::sample(rng, k, count).into_vec();
            picked.sort_unstable();
            prerequisites = picked.into_iter().map(|p| course_ids[p].clone()).collect();
        }
        courses.push(Course { id: id.clone(), frequency: spec.frequency, prerequisites });
    }

    // Round-robin coverage first, then random extra courses per instructor.
    let mut teach: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); spec.instructors];
    for c in 0..nc {
        teach[c % spec.instructors].insert(c);
    }
    for set in &mut teach {
        let target = rng.random_range(set.len().max(1)..=spec.max_instructor_courses.max(set.len())).min(nc);
        while set.len() < target {
            set.insert(rng.random_range(0..nc));
        }
    }
    let instructors = ids("i", 2, spec.instructors)
        .into_iter()
        .zip(teach)
        .map(|(id, set)| Instructor {
            id,
            max_units: spec.frequency * set.len() as u32,
            min_units: 0,
            eligible: set.into_iter().map(|c| course_ids[c].clone()).collect(),
        })
        .collect();

    // Dedicated rooms; with fewer rooms than courses they are shared round-robin.
    let mut hosts: Vec<BTreeSet<String>> = vec![BTreeSet::new(); spec.rooms];
    for (c, id) in course_ids.iter().enumerate() {
        hosts[c % spec.rooms].insert(id.clone());
    }
    if spec.rooms < nc {
        log::info!("{} rooms for {} courses: some rooms host several courses", spec.rooms, nc);
    }
    let all: BTreeSet<String> = course_ids.iter().cloned().collect();
    for set in hosts.iter_mut().skip(nc) {
        *set = all.clone();
    }
    let rooms = ids("r", 3, spec.rooms)
        .into_iter()
        .zip(hosts)
        .map(|(id, eligible)| Room { id, eligible, min_cap: spec.room_min_cap, max_cap: spec.room_max_cap })
        .collect();

    let want = (spec.max_courses as usize + spec.extra_eligible).min(nc);
    let mut students = Vec::with_capacity(requests.len());
    for req in requests {
        let mut eligible: BTreeSet<String> = req.courses().cloned().collect();
        let mut pool: Vec<&String> = course_ids.iter().filter(|c| !eligible.contains(*c)).collect();
        pool.shuffle(rng);
        for c in pool {
            if eligible.len() >= want {
                break;
            }
            eligible.insert(c.clone());
        }
        let interest = quantize_interest(&raw_interest(spec, course_ids, req, rng))?;
        let mut g: BTreeMap<String, f64> = grades
            .into_iter()
            .flatten()
            .filter(|((st, _), _)| *st == req.student)
            .map(|((_, c), v)| (c.clone(), *v))
            .collect();
        for course in courses.iter().filter(|c| eligible.contains(&c.id)) {
            for p in &course.prerequisites {
                if !g.contains_key(p) {
                    g.insert(p.clone(), grade(spec, rng));
                }
            }
        }
        students.push(Student {
            id: req.student.clone(),
            eligible,
            min_courses: spec.min_courses,
            max_courses: spec.max_courses,
            interest,
            grades: g,
        });
    }
    Ok(Instance::new(spec.days, spec.periods, courses, instructors, students, rooms)?)
}

/// Generates an instance from `spec`. Same spec, same instance.
pub fn generate(spec: &GenSpec) -> Result<Instance, GenError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let course_ids = ids("c", 3, spec.courses);
    let requests: Vec<StudentRequests> = ids("s", 3, spec.students)
        .into_iter()
        .map(|student| {
            let mut ranked = course_ids.choose_multiple(&mut rng, spec.requests.min(spec.courses)).cloned();
            StudentRequests { student, first: ranked.next(), second: ranked.next() }
        })
        .collect();
    build_instance(spec, &course_ids, &requests, None, &mut rng)
}

fn with_students(instance: &Instance, students: &[Student]) -> Instance {
    Instance::new(
        instance.weekdays(),
        instance.periods(),
        instance.courses().to_vec(),
        instance.instructors().to_vec(),
        students.to_vec(),
        instance.rooms().to_vec(),
    )
    .expect("subset of a valid instance")
}

/// Splits the students into `k` contiguous groups whose sizes differ by at
/// most one, smaller groups first. Courses, instructors and rooms are kept whole.
pub fn split_subsets(instance: &Instance, k: usize) -> Result<Vec<Instance>, GenError> {
    let n = instance.students().len();
    if k == 0 || k > n.max(1) {
        return Err(GenError::InvalidSpec(format!("cannot split {n} students into {k} groups")));
    }
    let sizes: Vec<usize> = (0..k).map(|g| n / k + usize::from(g >= k - n % k)).collect();
    split_subsets_sized(instance, &sizes)
}

/// Splits the students into contiguous groups of the given sizes.
pub fn split_subsets_sized(instance: &Instance, sizes: &[usize]) -> Result<Vec<Instance>, GenError> {
    let n = instance.students().len();
    if sizes.iter().sum::<usize>() != n || sizes.is_empty() {
        return Err(GenError::InvalidSpec(format!("group sizes {sizes:?} do not add up to {n} students")));
    }
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &size in sizes {
        out.push(with_students(instance, &instance.students()[start..start + size]));
        start += size;
    }
    Ok(out)
}
