//! Small instances and models shared by unit tests, integration tests and
//! the acceptance suite.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::{build, EncodeOptions};
use crate::ilp::{Constraint, IpModel, LinExpr, Linear, Objective, Relation, Sense, VarId};
use crate::model::{normalize_interest, Course, Instance, Instructor, Room, Student};

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn interest(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(c, v)| (c.to_string(), *v)).collect()
}

pub fn course(id: &str, frequency: u32, prereqs: &[&str]) -> Course {
    Course { id: id.into(), frequency, prerequisites: prereqs.iter().map(|s| s.to_string()).collect() }
}

pub fn student(id: &str, eligible: &[&str], min: u32, max: u32, interest_: &[(&str, f64)]) -> Student {
    Student {
        id: id.into(),
        eligible: set(eligible),
        min_courses: min,
        max_courses: max,
        interest: interest(interest_),
        grades: BTreeMap::new(),
    }
}

pub fn instructor(id: &str, eligible: &[&str], min: u32, max: u32) -> Instructor {
    Instructor { id: id.into(), eligible: set(eligible), min_units: min, max_units: max }
}

pub fn room(id: &str, eligible: &[&str], min: u32, max: u32) -> Room {
    Room { id: id.into(), eligible: set(eligible), min_cap: min, max_cap: max }
}

/// Two students contesting course `x`; `s1` dominates `s2` on it.
pub fn contested() -> Instance {
    let mut s1 = student("s1", &["x", "y"], 0, 2, &[("x", 0.6), ("y", 0.4)]);
    let mut s2 = student("s2", &["x", "y"], 0, 2, &[("x", 0.3), ("y", 0.7)]);
    s1.grades.insert("p".into(), 4.0);
    s2.grades.insert("p".into(), 2.0);
    Instance::new(
        2,
        1,
        vec![course("p", 1, &[]), course("x", 1, &["p"]), course("y", 1, &[])],
        vec![instructor("i1", &["x", "y"], 0, 4)],
        vec![s1, s2],
        vec![room("r1", &["x", "y"], 0, 2)],
    )
    .unwrap()
}

/// One of everything, one slot.
pub fn single() -> Instance {
    Instance::new(
        1,
        1,
        vec![course("c1", 1, &[])],
        vec![instructor("i1", &["c1"], 0, 1)],
        vec![student("s1", &["c1"], 1, 1, &[("c1", 1.0)])],
        vec![room("r1", &["c1"], 0, 1)],
    )
    .unwrap()
}

/// Random instance small enough for exhaustive enumeration of its encoding.
pub fn tiny(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weekdays = rng.random_range(1..=2u32);
    let periods = rng.random_range(1..=(4 / weekdays));
    let nc = rng.random_range(1..=3usize);
    let ni = rng.random_range(1..=2usize);
    let ns = rng.random_range(1..=3usize);
    let nr = rng.random_range(1..=2usize);
    let cids: Vec<String> = (1..=nc).map(|k| format!("c{k}")).collect();
    let pick = |rng: &mut ChaCha8Rng, min: usize| -> Vec<String> {
        let mut v: Vec<String> = cids.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
        while v.len() < min {
            let c = cids[rng.random_range(0..nc)].clone();
            if !v.contains(&c) {
                v.push(c);
            }
        }
        v.sort();
        v
    };
    let courses: Vec<Course> = cids
        .iter()
        .enumerate()
        .map(|(k, id)| {
            let pre = if k > 0 && rng.random_bool(0.3) { vec![cids[0].clone()] } else { vec![] };
            Course { id: id.clone(), frequency: rng.random_range(1..=weekdays), prerequisites: pre }
        })
        .collect();
    let instructors: Vec<Instructor> = (1..=ni)
        .map(|k| {
            let e = pick(&mut rng, 1);
            Instructor { id: format!("i{k}"), eligible: e.into_iter().collect(), min_units: 0, max_units: rng.random_range(1..=3) }
        })
        .collect();
    let students: Vec<Student> = (1..=ns)
        .map(|k| {
            let e = pick(&mut rng, 1);
            let raw: BTreeMap<String, f64> =
                cids.iter().map(|c| (c.clone(), rng.random_range(1..=4) as f64 / 4.0)).collect();
            let interest = normalize_interest(&raw).unwrap();
            let grades = cids.iter().map(|c| (c.clone(), rng.random_range(0..=4) as f64)).collect();
            let min = rng.random_range(0..=1u32.min(e.len() as u32));
            Student {
                id: format!("s{k}"),
                eligible: e.iter().cloned().collect(),
                min_courses: min,
                max_courses: rng.random_range(min.max(1)..=e.len() as u32),
                interest,
                grades,
            }
        })
        .collect();
    let rooms: Vec<Room> = (1..=nr)
        .map(|k| {
            let e = pick(&mut rng, 1);
            let min = rng.random_range(0..=1);
            Room { id: format!("r{k}"), eligible: e.into_iter().collect(), min_cap: min, max_cap: rng.random_range(min.max(1)..=3) }
        })
        .collect();
    Instance::new(weekdays, periods, courses, instructors, students, rooms).unwrap()
}

/// Seeds of [`tiny`] whose encoding under `options` has at most `max_vars` variables.
pub fn tiny_seeds(options: &EncodeOptions, max_vars: usize, count: usize) -> Vec<(u64, Instance)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        let inst = tiny(seed);
        if let Ok((m, _)) = build(&inst, options) {
            if m.num_vars() <= max_vars {
                out.push((seed, inst));
            }
        }
        seed += 1;
    }
    out
}

/// Enumerates all assignments of `n` variables.
pub fn all_assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..(1u64 << n)).map(move |bits| (0..n).map(|k| bits >> k & 1 == 1).collect())
}

fn random_linear(rng: &mut ChaCha8Rng, vars: &[VarId]) -> Linear {
    let mut expr = LinExpr::new();
    let k = rng.random_range(1..=vars.len().min(4));
    for _ in 0..k {
        let v = vars[rng.random_range(0..vars.len())];
        let c = rng.random_range(-3i64..=3);
        expr.add(if c == 0 { 1 } else { c }, v);
    }
    if rng.random_bool(0.2) {
        expr.constant = rng.random_range(-1..=1);
    }
    let (lo, hi) = expr.range();
    let rhs = rng.random_range(lo - 1..=hi + 1);
    let rel = match rng.random_range(0..3) {
        0 => Relation::Le,
        1 => Relation::Ge,
        _ => Relation::Eq,
    };
    Linear::new(expr, rel, rhs)
}

/// Small random model mixing linear, implication and reified constraints.
pub fn random_model(seed: u64, max_vars: usize) -> IpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_vars);
    let mut m = IpModel::new();
    let vars: Vec<VarId> = (0..n).map(|k| m.add_var(format!("x{k}")).unwrap()).collect();
    for _ in 0..rng.random_range(0..=n + 2) {
        let l = random_linear(&mut rng, &vars);
        let c = match rng.random_range(0..4) {
            0 | 1 => Constraint::Linear(l),
            2 => Constraint::Implication { antecedent: vars[rng.random_range(0..n)], consequent: l },
            _ => {
                let mut l = l;
                if l.rel == Relation::Eq {
                    l.rel = Relation::Ge;
                }
                Constraint::Reified { indicator: vars[rng.random_range(0..n)], iff: l }
            }
        };
        m.add_constraint(c).unwrap();
    }
    let mut obj = LinExpr::new();
    for &v in &vars {
        let c = rng.random_range(-4i64..=4);
        if c != 0 {
            obj.add(c, v);
        }
    }
    obj.constant = rng.random_range(-2..=2);
    let sense = if rng.random_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    m.set_objective(Objective { sense, expr: obj }).unwrap();
    m
}
