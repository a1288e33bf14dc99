//! Instance to 0-1 model translation and back.
//!
//! Variables exist only for eligible combinations, so eligibility needs no
//! constraint. Instructor and room unit participation coincide with the
//! unit variable itself and share its id.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use thiserror::Error;

use crate::ilp::{BranchHint, Constraint, IpModel, LinExpr, Linear, Objective, VarId};
use crate::model::{Assignment, EnvyTriple, Instance, Lecture, ModelError, Schedule, TimeSlot, Unit};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("student {student} is eligible for {eligible} courses but needs at least {required}")]
    EmptyEligibility { student: String, eligible: usize, required: u32 },
    #[error("schedule element has no variable in this encoding: {0}")]
    NotRepresentable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Hssp,
    Fhssp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeOptions {
    pub mode: Mode,
    /// FHSSP only: maximize assignments first, then minimize envy.
    pub lexicographic: bool,
    pub enforce_separate_days: bool,
    pub per_day_instructor_bound: Option<u32>,
    /// Enrolled students attend every unit of their lecture.
    pub attendance: bool,
    /// Redundant aggregate rows that tighten the search bound.
    pub implied_cuts: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            mode: Mode::Hssp,
            lexicographic: true,
            enforce_separate_days: true,
            per_day_instructor_bound: None,
            attendance: true,
            implied_cuts: true,
        }
    }
}

impl EncodeOptions {
    pub fn hssp() -> Self {
        EncodeOptions::default()
    }
    pub fn fhssp_pure() -> Self {
        EncodeOptions { mode: Mode::Fhssp, lexicographic: false, ..Default::default() }
    }
    pub fn fhssp_lex() -> Self {
        EncodeOptions { mode: Mode::Fhssp, lexicographic: true, ..Default::default() }
    }
}

/// (course, instructor)
pub type LectureKey = (usize, usize);
/// (course, instructor, student)
pub type AssignKey = (usize, usize, usize);
/// (course, instructor, room, slot index)
pub type UnitKey = (usize, usize, usize, usize);

/// Domain tuple to variable maps, one per family, in creation order.
#[derive(Debug, Clone, Default)]
pub struct VarCatalog {
    pub lectures: IndexMap<LectureKey, VarId>,
    pub assignments: IndexMap<AssignKey, VarId>,
    pub units: IndexMap<UnitKey, VarId>,
    /// (student, course)
    pub course_part: IndexMap<(usize, usize), VarId>,
    /// (student, unit)
    pub unit_part: IndexMap<(usize, UnitKey), VarId>,
    /// (s, s'): `s` holds fewer courses than `s'`.
    pub beta: IndexMap<(usize, usize), VarId>,
    /// (s, s'): `s` envies `s'`.
    pub alpha: IndexMap<(usize, usize), VarId>,
    pub triples: Vec<EnvyTriple>,
}

impl VarCatalog {
    /// Maximize the number of assignments.
    pub fn assignment_objective(&self) -> Objective {
        Objective::maximize(LinExpr::sum(self.assignments.values().copied()))
    }

    /// Minimize the number of envious ordered pairs.
    pub fn envy_objective(&self) -> Objective {
        Objective::minimize(LinExpr::sum(self.alpha.values().copied()))
    }

    /// Single objective equivalent to the lexicographic pair: any extra
    /// assignment outweighs all envy pairs together.
    pub fn weighted_objective(&self) -> Objective {
        let w = self.alpha.len() as i64 + 1;
        let mut e = LinExpr::new();
        for &v in self.assignments.values() {
            e.add(w, v);
        }
        for &v in self.alpha.values() {
            e.add(-1, v);
        }
        Objective::maximize(e)
    }
}

/// Objectives solved after the model's own, for the given options.
pub fn secondary_objectives(options: &EncodeOptions, catalog: &VarCatalog) -> Vec<Objective> {
    match (options.mode, options.lexicographic) {
        (Mode::Fhssp, true) => vec![catalog.envy_objective()],
        _ => vec![],
    }
}

const A_HINT: BranchHint = BranchHint { priority: 0, prefer: Some(true) };
const L_HINT: BranchHint = BranchHint { priority: 1, prefer: Some(false) };
const U_HINT: BranchHint = BranchHint { priority: 2, prefer: Some(true) };
const AUX_HINT: BranchHint = BranchHint { priority: 3, prefer: None };
const BETA_HINT: BranchHint = BranchHint { priority: 4, prefer: None };
const ALPHA_HINT: BranchHint = BranchHint { priority: 4, prefer: Some(false) };

fn slot_label(instance: &Instance, t: usize) -> String {
    let TimeSlot { day, period } = instance.slot_at(t);
    format!("{day},{period}")
}

fn create_vars(instance: &Instance, options: &EncodeOptions) -> Result<(IpModel, VarCatalog), EncodeError> {
    let mut m = IpModel::new();
    let mut cat = VarCatalog::default();
    let cid = |c: usize| instance.courses()[c].id.as_str();
    let iid = |i: usize| instance.instructors()[i].id.as_str();
    let sid = |s: usize| instance.students()[s].id.as_str();
    let rid = |r: usize| instance.rooms()[r].id.as_str();
    let var = |m: &mut IpModel, name: String, hint| m.add_var_hinted(name, hint).expect("generated names are unique");

    let mut lectures = Vec::new();
    for (c, course) in instance.courses().iter().enumerate() {
        for (i, ins) in instance.instructors().iter().enumerate() {
            if ins.eligible.contains(&course.id) {
                lectures.push((c, i));
            }
        }
    }
    for &(c, i) in &lectures {
        for s in 0..instance.students().len() {
            if instance.student_eligible(s, c) {
                let v = var(&mut m, format!("a[{},{},{}]", cid(c), iid(i), sid(s)), A_HINT);
                cat.assignments.insert((c, i, s), v);
            }
        }
    }
    for &(c, i) in &lectures {
        let v = var(&mut m, format!("l[{},{}]", cid(c), iid(i)), L_HINT);
        cat.lectures.insert((c, i), v);
    }
    for &(c, i) in &lectures {
        for (r, room) in instance.rooms().iter().enumerate() {
            if !room.eligible.contains(&instance.courses()[c].id) {
                continue;
            }
            for t in 0..instance.slot_count() {
                let name = format!("u[{},{},{},{}]", cid(c), iid(i), rid(r), slot_label(instance, t));
                cat.units.insert((c, i, r, t), var(&mut m, name, U_HINT));
            }
        }
    }
    for s in 0..instance.students().len() {
        for c in 0..instance.courses().len() {
            if instance.student_eligible(s, c) {
                let v = var(&mut m, format!("cs[{},{}]", sid(s), cid(c)), AUX_HINT);
                cat.course_part.insert((s, c), v);
            }
        }
    }
    let unit_keys: Vec<UnitKey> = cat.units.keys().copied().collect();
    for s in 0..instance.students().len() {
        for &(c, i, r, t) in &unit_keys {
            if cat.assignments.contains_key(&(c, i, s)) {
                let name = format!("us[{},{},{},{},{}]", sid(s), cid(c), iid(i), rid(r), slot_label(instance, t));
                cat.unit_part.insert((s, (c, i, r, t)), var(&mut m, name, AUX_HINT));
            }
        }
    }
    if options.mode == Mode::Fhssp {
        cat.triples = instance.envy_eligible_triples()?;
        for tr in &cat.triples {
            let key = (tr.student, tr.envied);
            if cat.alpha.contains_key(&key) {
                continue;
            }
            let (s, t) = key;
            let b = var(&mut m, format!("beta[{},{}]", sid(s), sid(t)), BETA_HINT);
            let a = var(&mut m, format!("alpha[{},{}]", sid(s), sid(t)), ALPHA_HINT);
            cat.beta.insert(key, b);
            cat.alpha.insert(key, a);
        }
    }
    Ok((m, cat))
}

/// Everything a constraint family needs.
struct Ctx<'a> {
    instance: &'a Instance,
    options: &'a EncodeOptions,
    cat: &'a VarCatalog,
    /// Units of each lecture.
    lecture_units: BTreeMap<LectureKey, Vec<(UnitKey, VarId)>>,
}

impl<'a> Ctx<'a> {
    fn new(instance: &'a Instance, options: &'a EncodeOptions, cat: &'a VarCatalog) -> Self {
        let mut lecture_units: BTreeMap<LectureKey, Vec<(UnitKey, VarId)>> = BTreeMap::new();
        for &l in cat.lectures.keys() {
            lecture_units.insert(l, Vec::new());
        }
        for (&k, &v) in &cat.units {
            lecture_units.get_mut(&(k.0, k.1)).expect("lecture exists").push((k, v));
        }
        Ctx { instance, options, cat, lecture_units }
    }
}

fn le(vars: impl IntoIterator<Item = VarId>, k: i64) -> Constraint {
    Constraint::Linear(Linear::le(LinExpr::sum(vars), k))
}

/// Per entity and slot, at most one unit.
fn time_exclusivity(ctx: &Ctx) -> Vec<Constraint> {
    let mut student: BTreeMap<(usize, usize), Vec<VarId>> = BTreeMap::new();
    for (&(s, (_, _, _, t)), &v) in &ctx.cat.unit_part {
        student.entry((s, t)).or_default().push(v);
    }
    let mut instructor: BTreeMap<(usize, usize), Vec<VarId>> = BTreeMap::new();
    let mut room: BTreeMap<(usize, usize), Vec<VarId>> = BTreeMap::new();
    for (&(_, i, r, t), &v) in &ctx.cat.units {
        instructor.entry((i, t)).or_default().push(v);
        room.entry((r, t)).or_default().push(v);
    }
    [student, instructor, room]
        .into_iter()
        .flat_map(|groups| groups.into_values())
        .filter(|vs| vs.len() >= 2)
        .map(|vs| le(vs, 1))
        .collect()
}

/// Instructor weekly units, student course counts, unit attendance.
fn numeric_bounds(ctx: &Ctx) -> Vec<Constraint> {
    let mut out = Vec::new();
    let inst = ctx.instance;
    let mut taught: Vec<Vec<VarId>> = vec![Vec::new(); inst.instructors().len()];
    for (&(_, i, _, _), &v) in &ctx.cat.units {
        taught[i].push(v);
    }
    for (ins, vars) in inst.instructors().iter().zip(taught) {
        if ins.min_units > 0 {
            out.push(Constraint::Linear(Linear::ge(LinExpr::sum(vars.iter().copied()), ins.min_units as i64)));
        }
        if (ins.max_units as usize) < vars.len() {
            out.push(le(vars, ins.max_units as i64));
        }
    }
    let mut held: Vec<Vec<VarId>> = vec![Vec::new(); inst.students().len()];
    for (&(s, _), &v) in &ctx.cat.course_part {
        held[s].push(v);
    }
    for (st, vars) in inst.students().iter().zip(held) {
        if st.min_courses > 0 {
            out.push(Constraint::Linear(Linear::ge(LinExpr::sum(vars.iter().copied()), st.min_courses as i64)));
        }
        if (st.max_courses as usize) < vars.len() {
            out.push(le(vars, st.max_courses as i64));
        }
    }
    let mut attendees: BTreeMap<UnitKey, Vec<VarId>> = BTreeMap::new();
    for (&(_, unit), &v) in &ctx.cat.unit_part {
        attendees.entry(unit).or_default().push(v);
    }
    for (&unit, &u) in &ctx.cat.units {
        let room = &inst.rooms()[unit.2];
        let vars = attendees.get(&unit).cloned().unwrap_or_default();
        if (room.max_cap as usize) < vars.len() {
            out.push(le(vars.iter().copied(), room.max_cap as i64));
        }
        if room.min_cap > 0 {
            out.push(Constraint::Implication {
                antecedent: u,
                consequent: Linear::ge(LinExpr::sum(vars), room.min_cap as i64),
            });
        }
    }
    out
}

/// An offered lecture meets exactly `N_c` times; an unoffered one never.
fn lecture_frequency(ctx: &Ctx) -> Vec<Constraint> {
    ctx.cat
        .lectures
        .iter()
        .map(|(&(c, i), &l)| {
            let n = ctx.instance.courses()[c].frequency as i64;
            let expr = LinExpr::sum(ctx.lecture_units[&(c, i)].iter().map(|&(_, v)| v)).term(-n, l);
            Constraint::Linear(Linear::eq(expr, 0))
        })
        .collect()
}

/// At most one lecture of each course per student.
fn single_assignment(ctx: &Ctx) -> Vec<Constraint> {
    let mut groups: BTreeMap<(usize, usize), Vec<VarId>> = BTreeMap::new();
    for (&(c, _, s), &v) in &ctx.cat.assignments {
        groups.entry((c, s)).or_default().push(v);
    }
    groups.into_values().filter(|vs| vs.len() >= 2).map(|vs| le(vs, 1)).collect()
}

/// Student unit participation follows the unit, the assignment and the
/// course participation; with attendance it is their conjunction.
fn unit_coupling(ctx: &Ctx) -> Vec<Constraint> {
    let mut out = Vec::new();
    for (&(s, unit), &us) in &ctx.cat.unit_part {
        let (c, i, _, _) = unit;
        let u = ctx.cat.units[&unit];
        let a = ctx.cat.assignments[&(c, i, s)];
        let cs = ctx.cat.course_part[&(s, c)];
        for other in [u, a, cs] {
            out.push(Constraint::Linear(Linear::le(LinExpr::new().term(1, us).term(-1, other), 0)));
        }
        if ctx.options.attendance {
            let expr = LinExpr::new().term(1, us).term(-1, a).term(-1, u);
            out.push(Constraint::Linear(Linear::ge(expr, -1)));
        }
    }
    out
}

/// Once per day per lecture, room supply per slot, optional daily instructor cap.
fn days_and_rooms(ctx: &Ctx) -> Vec<Constraint> {
    let mut out = Vec::new();
    let inst = ctx.instance;
    if ctx.options.enforce_separate_days {
        for units in ctx.lecture_units.values() {
            let mut by_day: BTreeMap<u32, Vec<VarId>> = BTreeMap::new();
            for &((_, _, _, t), v) in units {
                by_day.entry(inst.slot_at(t).day).or_default().push(v);
            }
            out.extend(by_day.into_values().filter(|vs| vs.len() >= 2).map(|vs| le(vs, 1)));
        }
    }
    let rooms = inst.rooms().len();
    let mut by_slot: BTreeMap<usize, Vec<VarId>> = BTreeMap::new();
    for (&(_, _, _, t), &v) in &ctx.cat.units {
        by_slot.entry(t).or_default().push(v);
    }
    out.extend(by_slot.into_values().filter(|vs| vs.len() > rooms).map(|vs| le(vs, rooms as i64)));
    if let Some(cap) = ctx.options.per_day_instructor_bound {
        let mut daily: BTreeMap<(usize, u32), Vec<VarId>> = BTreeMap::new();
        for (&(_, i, _, t), &v) in &ctx.cat.units {
            daily.entry((i, inst.slot_at(t).day)).or_default().push(v);
        }
        out.extend(daily.into_values().filter(|vs| vs.len() > cap as usize).map(|vs| le(vs, cap as i64)));
    }
    out
}

/// Units and assignments need their lecture; course participation mirrors assignments.
fn consistency(ctx: &Ctx) -> Vec<Constraint> {
    let mut out = Vec::new();
    let implies = |x: VarId, y: VarId| Constraint::Linear(Linear::le(LinExpr::new().term(1, x).term(-1, y), 0));
    for (&(c, i, _, _), &u) in &ctx.cat.units {
        out.push(implies(u, ctx.cat.lectures[&(c, i)]));
    }
    for (&(c, i, _), &a) in &ctx.cat.assignments {
        let l = ctx.cat.lectures[&(c, i)];
        out.push(implies(a, l));
        out.push(Constraint::Implication {
            antecedent: a,
            consequent: Linear::ge(LinExpr::sum(ctx.lecture_units[&(c, i)].iter().map(|&(_, v)| v)), 1),
        });
    }
    let mut by_course: BTreeMap<(usize, usize), Vec<(VarId, VarId)>> = BTreeMap::new();
    for (&(c, i, s), &a) in &ctx.cat.assignments {
        by_course.entry((s, c)).or_default().push((a, ctx.cat.lectures[&(c, i)]));
    }
    for (&(s, c), &cs) in &ctx.cat.course_part {
        let pairs = by_course.get(&(s, c)).map(Vec::as_slice).unwrap_or(&[]);
        let mut expr = LinExpr::new().term(1, cs);
        for &(a, _) in pairs {
            expr.add(-1, a);
        }
        out.push(Constraint::Linear(Linear::le(expr, 0)));
        for &(a, l) in pairs {
            out.push(Constraint::Linear(Linear::le(LinExpr::sum([a, l]).term(-1, cs), 1)));
        }
    }
    out
}

/// beta[s,s'] iff s holds fewer courses; alpha[s,s'] whenever a triple witnesses envy.
fn envy(ctx: &Ctx) -> Vec<Constraint> {
    let mut out = Vec::new();
    let mut held: Vec<Vec<VarId>> = vec![Vec::new(); ctx.instance.students().len()];
    for (&(s, _), &v) in &ctx.cat.course_part {
        held[s].push(v);
    }
    for (&(s, t), &b) in &ctx.cat.beta {
        let mut expr = LinExpr::sum(held[s].iter().copied());
        for &v in &held[t] {
            expr.add(-1, v);
        }
        out.push(Constraint::Reified { indicator: b, iff: Linear::le(expr, -1) });
    }
    for tr in &ctx.cat.triples {
        let key = (tr.student, tr.envied);
        let expr = LinExpr::new()
            .term(1, ctx.cat.course_part[&(tr.envied, tr.course)])
            .term(-1, ctx.cat.course_part[&(tr.student, tr.course)])
            .term(1, ctx.cat.beta[&key])
            .term(-1, ctx.cat.alpha[&key]);
        out.push(Constraint::Linear(Linear::le(expr, 1)));
    }
    out
}

/// Valid aggregate rows: a student's assignments respect the course
/// maximum, and with attendance a lecture's roll fits its largest room.
fn implied_cuts(ctx: &Ctx) -> Vec<Constraint> {
    let mut out = Vec::new();
    let inst = ctx.instance;
    let mut per_student: Vec<Vec<VarId>> = vec![Vec::new(); inst.students().len()];
    let mut per_lecture: BTreeMap<LectureKey, Vec<VarId>> = BTreeMap::new();
    for (&(c, i, s), &a) in &ctx.cat.assignments {
        per_student[s].push(a);
        per_lecture.entry((c, i)).or_default().push(a);
    }
    for (st, vars) in inst.students().iter().zip(per_student) {
        if (st.max_courses as usize) < vars.len() {
            out.push(le(vars, st.max_courses as i64));
        }
    }
    if ctx.options.attendance {
        for ((c, _), vars) in per_lecture {
            let course = &inst.courses()[c].id;
            let cap = inst.rooms().iter().filter(|r| r.eligible.contains(course)).map(|r| r.max_cap).max().unwrap_or(0);
            if (cap as usize) < vars.len() {
                out.push(le(vars, cap as i64));
            }
        }
    }
    out
}

/// Builds the model for `instance`. The model objective is the first phase;
/// see [`secondary_objectives`] for the rest.
pub fn build(instance: &Instance, options: &EncodeOptions) -> Result<(IpModel, VarCatalog), EncodeError> {
    for (s, st) in instance.students().iter().enumerate() {
        let eligible = (0..instance.courses().len()).filter(|&c| instance.student_eligible(s, c)).count();
        if eligible < st.min_courses as usize {
            return Err(EncodeError::EmptyEligibility {
                student: st.id.clone(),
                eligible,
                required: st.min_courses,
            });
        }
    }
    let (mut model, cat) = create_vars(instance, options)?;
    let ctx = Ctx::new(instance, options, &cat);
    let mut families: Vec<fn(&Ctx) -> Vec<Constraint>> =
        vec![time_exclusivity, numeric_bounds, lecture_frequency, single_assignment, unit_coupling, days_and_rooms, consistency];
    if options.mode == Mode::Fhssp {
        families.push(envy);
    }
    if options.implied_cuts {
        families.push(implied_cuts);
    }
    for family in families {
        for c in family(&ctx) {
            model.add_constraint(c).expect("catalog variables");
        }
    }
    let objective = match (options.mode, options.lexicographic) {
        (Mode::Hssp, _) | (Mode::Fhssp, true) => cat.assignment_objective(),
        (Mode::Fhssp, false) => cat.envy_objective(),
    };
    model.set_objective(objective).expect("catalog variables");
    let mode = match (options.mode, options.lexicographic) {
        (Mode::Hssp, _) => "hssp",
        (Mode::Fhssp, false) => "fhssp-pure",
        (Mode::Fhssp, true) => "fhssp-lex",
    };
    model.metadata.insert("mode".into(), mode.into());
    log::debug!("encoded {} variables, {} constraints", model.num_vars(), model.constraints().len());
    Ok((model, cat))
}

/// Reads the schedule off an assignment. No feasibility filtering.
pub fn decode(instance: &Instance, catalog: &VarCatalog, assignment: &[bool]) -> Schedule {
    let on = |v: &VarId| assignment[v.index()];
    let lecture = |c: usize, i: usize| Lecture::new(instance.courses()[c].id.clone(), instance.instructors()[i].id.clone());
    let mut schedule = Schedule::default();
    for (&(c, i), v) in &catalog.lectures {
        if on(v) {
            schedule.lectures.insert(lecture(c, i));
        }
    }
    for (&(c, i, s), v) in &catalog.assignments {
        if on(v) {
            schedule
                .assignments
                .insert(Assignment { lecture: lecture(c, i), student: instance.students()[s].id.clone() });
        }
    }
    for (&(c, i, r, t), v) in &catalog.units {
        if on(v) {
            schedule.units.insert(Unit {
                lecture: lecture(c, i),
                room: instance.rooms()[r].id.clone(),
                slot: instance.slot_at(t),
            });
        }
    }
    schedule
}

/// The model assignment describing `schedule`: decision variables from the
/// schedule, auxiliaries at their intended values and envy indicators tight.
pub fn indicator_assignment(
    instance: &Instance,
    catalog: &VarCatalog,
    num_vars: usize,
    schedule: &Schedule,
) -> Result<Vec<bool>, EncodeError> {
    let mut x = vec![false; num_vars];
    let lecture_key = |l: &Lecture| -> Result<LectureKey, EncodeError> {
        let c = instance.course_index(&l.course);
        let i = instance.instructor_index(&l.instructor);
        match (c, i) {
            (Some(c), Some(i)) if catalog.lectures.contains_key(&(c, i)) => Ok((c, i)),
            _ => Err(EncodeError::NotRepresentable(format!("lecture {} {}", l.course, l.instructor))),
        }
    };
    for l in &schedule.lectures {
        x[catalog.lectures[&lecture_key(l)?].index()] = true;
    }
    for a in &schedule.assignments {
        let (c, i) = lecture_key(&a.lecture)?;
        let v = instance
            .student_index(&a.student)
            .and_then(|s| catalog.assignments.get(&(c, i, s)))
            .ok_or_else(|| EncodeError::NotRepresentable(format!("assignment of {}", a.student)))?;
        x[v.index()] = true;
    }
    for u in &schedule.units {
        let (c, i) = lecture_key(&u.lecture)?;
        let in_grid = u.slot.day < instance.weekdays() && u.slot.period < instance.periods();
        let v = instance
            .room_index(&u.room)
            .filter(|_| in_grid)
            .and_then(|r| catalog.units.get(&(c, i, r, instance.slot_index(u.slot))))
            .ok_or_else(|| EncodeError::NotRepresentable(format!("unit in room {}", u.room)))?;
        x[v.index()] = true;
    }
    for (&(s, c), v) in &catalog.course_part {
        x[v.index()] = catalog.assignments.iter().any(|(&(c2, _, s2), a)| c2 == c && s2 == s && x[a.index()]);
    }
    for (&(s, unit), v) in &catalog.unit_part {
        x[v.index()] = x[catalog.units[&unit].index()] && x[catalog.assignments[&(unit.0, unit.1, s)].index()];
    }
    let mut count = vec![0i64; instance.students().len()];
    for (&(s, _), v) in &catalog.course_part {
        count[s] += x[v.index()] as i64;
    }
    for (&(s, t), v) in &catalog.beta {
        x[v.index()] = count[s] < count[t];
    }
    for tr in &catalog.triples {
        let key = (tr.student, tr.envied);
        let theirs = x[catalog.course_part[&(tr.envied, tr.course)].index()];
        let mine = x[catalog.course_part[&(tr.student, tr.course)].index()];
        if theirs && !mine && x[catalog.beta[&key].index()] {
            x[catalog.alpha[&key].index()] = true;
        }
    }
    Ok(x)
}

/// `|A|` for HSSP, the envy count for FHSSP.
pub fn objective_of(schedule: &Schedule, instance: &Instance, mode: Mode) -> Result<i64, ModelError> {
    Ok(match mode {
        Mode::Hssp => schedule.assignments.len() as i64,
        Mode::Fhssp => instance.audit_envy(schedule)?.count as i64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::model::Course;
    use crate::solver::{brute_force, solve, SolveConfig, Status};
    use crate::validator::{validate_with, ValidateOptions};

    fn ctx_check(inst: &Instance, opts: &EncodeOptions, family: fn(&Ctx) -> Vec<Constraint>, x: &[bool]) -> bool {
        let (_, cat) = create_vars(inst, opts).unwrap();
        let ctx = Ctx::new(inst, opts, &cat);
        family(&ctx).iter().all(|c| c.holds(x))
    }

    #[test]
    fn single_instance_all_ones() {
        let inst = single();
        let (m, cat) = build(&inst, &EncodeOptions::hssp()).unwrap();
        // l, a, u, cs, us
        assert_eq!(m.num_vars(), 5);
        let ones = vec![true; 5];
        assert!(m.eval(&ones).unwrap().0);
        let sat: Vec<Vec<bool>> = all_assignments(5).filter(|x| m.eval(x).unwrap().0).collect();
        assert!(sat.contains(&ones));
        let s = decode(&inst, &cat, &ones);
        assert_eq!((s.lectures.len(), s.assignments.len(), s.units.len()), (1, 1, 1));
        assert!(decode(&inst, &cat, &[false; 5]).assignments.is_empty());
        let out = solve(&m, &SolveConfig::default()).unwrap();
        assert_eq!(out.objective, Some(1));
    }

    #[test]
    fn too_few_eligible_courses() {
        let inst = Instance::new(
            1,
            1,
            vec![course("c1", 1, &[])],
            vec![instructor("i1", &["c1"], 0, 1)],
            vec![student("s1", &["c1"], 2, 2, &[("c1", 1.0)])],
            vec![room("r1", &["c1"], 0, 1)],
        );
        // The instance itself may reject this; if not, the encoder must.
        if let Ok(inst) = inst {
            assert!(matches!(build(&inst, &EncodeOptions::hssp()), Err(EncodeError::EmptyEligibility { .. })));
        }
    }

    #[test]
    fn no_triples_no_alpha() {
        let inst = single();
        let (m, cat) = build(&inst, &EncodeOptions::fhssp_pure()).unwrap();
        assert!(cat.alpha.is_empty());
        assert!(m.objective().expr.terms.is_empty());
        assert_eq!(m.objective().expr.constant, 0);
    }

    #[test]
    fn variable_counts() {
        let inst = contested();
        let (_, cat) = build(&inst, &EncodeOptions::fhssp_lex()).unwrap();
        let lectures: usize = inst.instructors().iter().map(|i| i.eligible.len()).sum();
        assert_eq!(cat.lectures.len(), lectures);
        let units: usize = cat
            .lectures
            .keys()
            .map(|&(c, _)| {
                inst.rooms().iter().filter(|r| r.eligible.contains(&inst.courses()[c].id)).count() * inst.slot_count()
            })
            .sum();
        assert_eq!(cat.units.len(), units);
        // s1 dominates on x, s2 on y.
        assert_eq!(cat.alpha.keys().copied().collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
    }

    fn feasible_example() -> (Instance, Schedule) {
        let inst = Instance::new(
            2,
            2,
            vec![course("c1", 2, &[]), course("c2", 1, &[])],
            vec![instructor("i1", &["c1", "c2"], 0, 4)],
            vec![
                student("s1", &["c1", "c2"], 1, 2, &[("c1", 0.5), ("c2", 0.5)]),
                student("s2", &["c1"], 1, 1, &[("c1", 1.0)]),
            ],
            vec![room("r1", &["c1"], 0, 2), room("r2", &["c2"], 0, 2)],
        )
        .unwrap();
        let l1 = Lecture::new("c1", "i1");
        let l2 = Lecture::new("c2", "i1");
        let mut s = Schedule::default();
        s.lectures.extend([l1.clone(), l2.clone()]);
        for (l, st) in [(&l1, "s1"), (&l1, "s2"), (&l2, "s1")] {
            s.assignments.insert(Assignment { lecture: l.clone(), student: st.into() });
        }
        s.units.insert(Unit { lecture: l1.clone(), room: "r1".into(), slot: TimeSlot::new(0, 0) });
        s.units.insert(Unit { lecture: l1, room: "r1".into(), slot: TimeSlot::new(1, 0) });
        s.units.insert(Unit { lecture: l2, room: "r2".into(), slot: TimeSlot::new(0, 1) });
        (inst, s)
    }

    #[test]
    fn round_trip_known_schedule() {
        let (inst, s) = feasible_example();
        assert!(crate::validator::validate(&inst, &s).feasible);
        let opts = EncodeOptions::fhssp_lex();
        let (m, cat) = build(&inst, &opts).unwrap();
        let x = indicator_assignment(&inst, &cat, m.num_vars(), &s).unwrap();
        assert!(m.eval(&x).unwrap().0);
        assert_eq!(decode(&inst, &cat, &x), s);
        assert_eq!(m.eval(&x).unwrap().1, objective_of(&s, &inst, Mode::Hssp).unwrap());
        assert_eq!(objective_of(&s, &inst, Mode::Hssp).unwrap(), 3);
    }

    /// Each family holds on a feasible schedule and catches its own kind of breakage.
    #[test]
    fn families_individually() {
        let (inst, s) = feasible_example();
        let opts = EncodeOptions::fhssp_lex();
        let (m, cat) = build(&inst, &opts).unwrap();
        let good = indicator_assignment(&inst, &cat, m.num_vars(), &s).unwrap();
        let fams: [fn(&Ctx) -> Vec<Constraint>; 9] = [
            time_exclusivity,
            numeric_bounds,
            lecture_frequency,
            single_assignment,
            unit_coupling,
            days_and_rooms,
            consistency,
            envy,
            implied_cuts,
        ];
        for f in fams {
            assert!(ctx_check(&inst, &opts, f, &good));
        }
        let with = |edit: &dyn Fn(&mut Schedule)| {
            let mut t = s.clone();
            edit(&mut t);
            indicator_assignment(&inst, &cat, m.num_vars(), &t).unwrap()
        };
        let l1 = Lecture::new("c1", "i1");
        let l2 = Lecture::new("c2", "i1");
        // Both lectures in the same slot: instructor clash.
        let clash = with(&|t| {
            t.units.retain(|u| u.lecture != l2);
            t.units.insert(Unit { lecture: l2.clone(), room: "r2".into(), slot: TimeSlot::new(0, 0) });
        });
        assert!(!ctx_check(&inst, &opts, time_exclusivity, &clash));
        // Third unit of c1.
        let extra = with(&|t| {
            t.units.insert(Unit { lecture: l1.clone(), room: "r1".into(), slot: TimeSlot::new(0, 1) });
        });
        assert!(!ctx_check(&inst, &opts, lecture_frequency, &extra));
        assert!(!ctx_check(&inst, &opts, days_and_rooms, &extra));
        // s2 drops below its minimum.
        let dropped = with(&|t| t.assignments.retain(|a| a.student != "s2"));
        assert!(!ctx_check(&inst, &opts, numeric_bounds, &dropped));
        // Assignment to an unoffered lecture.
        let unoffered = with(&|t| {
            t.lectures.remove(&l2);
            t.units.retain(|u| u.lecture != l2);
        });
        assert!(!ctx_check(&inst, &opts, consistency, &unoffered));
        // Absent student with attendance on.
        let mut absent = good.clone();
        let us = cat.unit_part.values().next().unwrap();
        absent[us.index()] = false;
        assert!(!ctx_check(&inst, &opts, unit_coupling, &absent));
    }

    #[test]
    fn single_assignment_family() {
        let inst = Instance::new(
            1,
            2,
            vec![course("c1", 1, &[])],
            vec![instructor("i1", &["c1"], 0, 2), instructor("i2", &["c1"], 0, 2)],
            vec![student("s1", &["c1"], 0, 1, &[("c1", 1.0)])],
            vec![room("r1", &["c1"], 0, 2)],
        )
        .unwrap();
        let opts = EncodeOptions::hssp();
        let (m, cat) = build(&inst, &opts).unwrap();
        let mut x = vec![false; m.num_vars()];
        for v in cat.assignments.values() {
            x[v.index()] = true;
        }
        assert!(!ctx_check(&inst, &opts, single_assignment, &x));
    }

    #[test]
    fn envy_family_forces_alpha() {
        let inst = contested();
        let opts = EncodeOptions::fhssp_pure();
        let (m, cat) = build(&inst, &opts).unwrap();
        // Seat on x goes to s2, who also holds y; s1 holds nothing.
        let mut s = Schedule::default();
        let lx = Lecture::new("x", "i1");
        s.lectures.insert(lx.clone());
        s.assignments.insert(Assignment { lecture: lx.clone(), student: "s2".into() });
        s.units.insert(Unit { lecture: lx, room: "r1".into(), slot: TimeSlot::new(0, 0) });
        let mut x = indicator_assignment(&inst, &cat, m.num_vars(), &s).unwrap();
        assert_eq!(objective_of(&s, &inst, Mode::Fhssp).unwrap(), 1);
        let alpha = cat.alpha[&(0, 1)];
        assert!(x[alpha.index()]);
        assert!(ctx_check(&inst, &opts, envy, &x));
        x[alpha.index()] = false;
        assert!(!ctx_check(&inst, &opts, envy, &x));
    }

    #[test]
    fn indicator_rejects_ineligible() {
        let (inst, mut s) = feasible_example();
        let (m, cat) = build(&inst, &EncodeOptions::hssp()).unwrap();
        s.assignments.insert(Assignment { lecture: Lecture::new("c2", "i1"), student: "s2".into() });
        assert!(matches!(indicator_assignment(&inst, &cat, m.num_vars(), &s), Err(EncodeError::NotRepresentable(_))));
    }

    /// True when the auxiliaries agree with the intended values derived from
    /// the decoded schedule, allowing envy indicators above their floor.
    fn aux_canonical(x: &[bool], canon: &[bool], cat: &VarCatalog) -> bool {
        let alpha: std::collections::HashSet<usize> = cat.alpha.values().map(|v| v.index()).collect();
        (0..x.len()).all(|k| if alpha.contains(&k) { x[k] >= canon[k] } else { x[k] == canon[k] })
    }

    #[test]
    fn exhaustive_model_validator_equivalence() {
        for opts in [EncodeOptions::hssp(), EncodeOptions::fhssp_lex()] {
            for (seed, inst) in tiny_seeds(&opts, 12, 40) {
                let (m, cat) = build(&inst, &opts).unwrap();
                let vopts = ValidateOptions::default();
                for x in all_assignments(m.num_vars()) {
                    let sat = m.eval(&x).unwrap().0;
                    let s = decode(&inst, &cat, &x);
                    let feasible = validate_with(&inst, &s, &vopts).feasible;
                    let canon = indicator_assignment(&inst, &cat, m.num_vars(), &s).unwrap();
                    assert_eq!(sat, feasible && aux_canonical(&x, &canon, &cat), "seed {seed} x {x:?}");
                }
            }
        }
    }

    #[test]
    fn objective_consistency_on_random_assignments() {
        let opts = EncodeOptions::fhssp_pure();
        for (_, inst) in tiny_seeds(&opts, 16, 30) {
            let (m, cat) = build(&inst, &opts).unwrap();
            for x in all_assignments(m.num_vars()).filter(|x| m.eval(x).unwrap().0).take(50) {
                let s = decode(&inst, &cat, &x);
                let canon = indicator_assignment(&inst, &cat, m.num_vars(), &s).unwrap();
                assert_eq!(m.eval(&canon).unwrap().1, objective_of(&s, &inst, Mode::Fhssp).unwrap());
                assert!(m.eval(&x).unwrap().1 >= objective_of(&s, &inst, Mode::Fhssp).unwrap());
            }
        }
    }

    #[test]
    fn solver_matches_oracle_on_encodings() {
        for opts in [EncodeOptions::hssp(), EncodeOptions::fhssp_pure()] {
            for (seed, inst) in tiny_seeds(&opts, 14, 25) {
                let (m, _) = build(&inst, &opts).unwrap();
                let a = solve(&m, &SolveConfig::default()).unwrap();
                let b = brute_force(&m).unwrap();
                assert_eq!((a.status, a.objective), (b.status, b.objective), "seed {seed}");
            }
        }
    }

    #[test]
    fn contested_seat_lexicographic() {
        let inst = contested();
        let opts = EncodeOptions::fhssp_lex();
        let (m, cat) = build(&inst, &opts).unwrap();
        let sec = secondary_objectives(&opts, &cat);
        let out = crate::solver::solve_lexicographic(&m, &sec, &SolveConfig::default()).unwrap();
        assert_eq!(out.status, Status::Optimal);
        let s = decode(&inst, &cat, out.best_assignment.as_ref().unwrap());
        assert!(crate::validator::validate(&inst, &s).feasible);
        assert_eq!(out.phase_objectives[1], objective_of(&s, &inst, Mode::Fhssp).unwrap());
    }

    #[test]
    fn weighted_objective_orders_like_lex() {
        let inst = contested();
        let (_, cat) = build(&inst, &EncodeOptions::fhssp_lex()).unwrap();
        let w = cat.weighted_objective();
        let a = *cat.assignments.values().next().unwrap();
        let coef = w.expr.terms.iter().find(|(_, v)| *v == a).unwrap().0;
        assert_eq!(coef, cat.alpha.len() as i64 + 1);
    }

    #[test]
    fn course_frequency_row_is_exact() {
        let inst = Instance::new(
            2,
            1,
            vec![Course { id: "c1".into(), frequency: 2, prerequisites: vec![] }],
            vec![instructor("i1", &["c1"], 0, 2)],
            vec![student("s1", &["c1"], 0, 1, &[("c1", 1.0)])],
            vec![room("r1", &["c1"], 0, 1)],
        )
        .unwrap();
        let opts = EncodeOptions::hssp();
        let (m, cat) = build(&inst, &opts).unwrap();
        let mut x = vec![false; m.num_vars()];
        x[cat.lectures[&(0, 0)].index()] = true;
        let first = *cat.units.values().next().unwrap();
        x[first.index()] = true;
        assert!(!ctx_check(&inst, &opts, lecture_frequency, &x));
        for v in cat.units.values() {
            x[v.index()] = true;
        }
        assert!(ctx_check(&inst, &opts, lecture_frequency, &x));
    }
}
