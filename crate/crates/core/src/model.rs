//! Warehouse domain model: locations, item types, items, complete and partial
//! placements, feasibility checking and the two objectives (storage time and
//! occupied ground area).
//!
//! Entities are referenced by their position in the owning [`Instance`] list;
//! string ids only appear at the JSON boundary.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationKind {
    Floor,
    Shelf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Location {
    pub id: String,
    pub capacity: i64,
    pub kind: LocationKind,
    pub base_place_time: i64,
    pub per_level_time: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemType {
    pub id: String,
    pub area: i64,
    pub shelf_allowed: bool,
    /// Maximum pile height; 1 means the type cannot be stacked.
    pub max_stack_height: i64,
}

impl ItemType {
    pub fn is_stackable(&self) -> bool {
        self.max_stack_height > 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub id: String,
    #[serde(rename = "type")]
    pub type_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    name: String,
    locations: Vec<Location>,
    item_types: Vec<ItemType>,
    items: Vec<Item>,
}

/// A warehouse problem statement. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "InstanceDoc", into = "InstanceDoc")]
pub struct Instance {
    name: String,
    locations: Vec<Location>,
    item_types: Vec<ItemType>,
    items: Vec<Item>,
    // resolved item -> type index; None for dangling references
    item_type_index: Vec<Option<usize>>,
}

impl From<InstanceDoc> for Instance {
    fn from(doc: InstanceDoc) -> Self {
        Instance::new(doc.name, doc.locations, doc.item_types, doc.items)
    }
}

impl From<Instance> for InstanceDoc {
    fn from(inst: Instance) -> Self {
        InstanceDoc {
            name: inst.name,
            locations: inst.locations,
            item_types: inst.item_types,
            items: inst.items,
        }
    }
}

impl Instance {
    pub fn new(name: impl Into<String>, locations: Vec<Location>, item_types: Vec<ItemType>, items: Vec<Item>) -> Self {
        let by_id: HashMap<&str, usize> = item_types.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
        let item_type_index = items.iter().map(|it| by_id.get(it.type_id.as_str()).copied()).collect();
        Instance {
            name: name.into(),
            locations,
            item_types,
            items,
            item_type_index,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn item_types(&self) -> &[ItemType] {
        &self.item_types
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    /// Type index of `item`. Panics on dangling references; call
    /// [`validate_instance`] first.
    pub fn type_index(&self, item: usize) -> usize {
        self.item_type_index[item].expect("item type resolves in a validated instance")
    }

    pub fn item_type(&self, item: usize) -> &ItemType {
        &self.item_types[self.type_index(item)]
    }

    pub fn area(&self, item: usize) -> i64 {
        self.item_type(item).area
    }

    pub fn max_height(&self, item: usize) -> usize {
        self.item_type(item).max_stack_height as usize
    }

    /// Whether an item of type `ty` may sit in location `loc`.
    pub fn type_eligible(&self, ty: usize, loc: usize) -> bool {
        self.locations[loc].kind == LocationKind::Floor || self.item_types[ty].shelf_allowed
    }

    pub fn eligible(&self, item: usize, loc: usize) -> bool {
        self.type_eligible(self.type_index(item), loc)
    }

    pub fn location_index(&self, id: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.id == id)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.id == id)
    }

    pub fn total_capacity(&self) -> i64 {
        self.locations.iter().map(|l| l.capacity).sum()
    }

    pub(crate) fn is_resolved(&self) -> bool {
        self.item_type_index.iter().all(Option::is_some)
    }
}

/// Where one item sits: location index, footprint within it, and height level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    pub location: usize,
    pub slot: u32,
    pub level: u32,
}

impl Placement {
    pub fn new(location: usize, slot: u32, level: u32) -> Self {
        Placement { location, slot, level }
    }
}

/// A complete assignment; `placements[i]` is the placement of item `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WopSolution {
    pub placements: Vec<Placement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementDoc {
    pub location: String,
    pub slot: u32,
    pub level: u32,
}

/// JSON form of a solution: item id -> placement.
pub type SolutionDoc = BTreeMap<String, PlacementDoc>;

impl WopSolution {
    pub fn new(placements: Vec<Placement>) -> Self {
        WopSolution { placements }
    }

    pub fn to_doc(&self, instance: &Instance) -> SolutionDoc {
        self.placements
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (
                    instance.items[i].id.clone(),
                    PlacementDoc {
                        location: instance.locations[p.location].id.clone(),
                        slot: p.slot,
                        level: p.level,
                    },
                )
            })
            .collect()
    }

    /// Decodes a solution document. Unknown ids are malformed; items absent
    /// from the document are reported in the `Err` of the inner result so the
    /// caller can surface them as an `incomplete` violation.
    pub fn from_doc(doc: &SolutionDoc, instance: &Instance) -> Result<std::result::Result<Self, Vec<String>>> {
        let mut slots: Vec<Option<Placement>> = vec![None; instance.num_items()];
        for (item_id, p) in doc {
            let item = instance
                .item_index(item_id)
                .ok_or_else(|| Error::MalformedSolution(format!("unknown item `{item_id}`")))?;
            let location = instance
                .location_index(&p.location)
                .ok_or_else(|| Error::MalformedSolution(format!("unknown location `{}`", p.location)))?;
            slots[item] = Some(Placement::new(location, p.slot, p.level));
        }
        let missing: Vec<String> = slots
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(i, _)| instance.items[i].id.clone())
            .collect();
        if !missing.is_empty() {
            return Ok(Err(missing));
        }
        Ok(Ok(WopSolution::new(slots.into_iter().flatten().collect())))
    }
}

/// Feasibility of a solution document; absent items surface as `incomplete`.
pub fn check_solution_doc(doc: &SolutionDoc, instance: &Instance) -> Result<FeasibilityReport> {
    match WopSolution::from_doc(doc, instance)? {
        Ok(solution) => is_feasible(&solution, instance),
        Err(missing) => {
            let mut report = FeasibilityReport::default();
            for id in missing {
                report.push("incomplete", format!("item `{id}` has no placement"));
            }
            Ok(report.finish())
        }
    }
}

/// Ground-level-only assignment; `None` means the item is not placed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialSolution {
    pub assignments: Vec<Option<usize>>,
}

impl PartialSolution {
    pub fn unplaced(num_items: usize) -> Self {
        PartialSolution {
            assignments: vec![None; num_items],
        }
    }

    pub fn placed_count(&self) -> usize {
        self.assignments.iter().filter(|a| a.is_some()).count()
    }

    /// Checks shelf eligibility and per-location capacity.
    pub fn check(&self, instance: &Instance) -> FeasibilityReport {
        let mut report = FeasibilityReport::default();
        let mut load = vec![0i64; instance.num_locations()];
        for (item, loc) in self.assignments.iter().enumerate() {
            let Some(loc) = *loc else { continue };
            if !instance.eligible(item, loc) {
                report.push(
                    "shelf-prohibited",
                    format!(
                        "item `{}` on shelf `{}`",
                        instance.items[item].id, instance.locations[loc].id
                    ),
                );
            }
            load[loc] += instance.area(item);
        }
        for (loc, used) in load.iter().enumerate() {
            if *used > instance.locations[loc].capacity {
                report.push(
                    "capacity",
                    format!(
                        "location `{}` holds area {used} > capacity {}",
                        instance.locations[loc].id, instance.locations[loc].capacity
                    ),
                );
            }
        }
        report.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl Default for FeasibilityReport {
    fn default() -> Self {
        FeasibilityReport {
            feasible: true,
            violations: Vec::new(),
        }
    }
}

impl FeasibilityReport {
    pub(crate) fn push(&mut self, rule: &str, detail: String) {
        self.violations.push(Violation {
            rule: rule.to_string(),
            detail,
        });
    }

    pub(crate) fn finish(mut self) -> Self {
        self.violations
            .sort_by(|a, b| (&a.rule, &a.detail).cmp(&(&b.rule, &b.detail)));
        self.feasible = self.violations.is_empty();
        self
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.feasible {
            return write!(f, "feasible");
        }
        write!(f, "infeasible:")?;
        for v in &self.violations {
            write!(f, " [{}] {};", v.rule, v.detail)?;
        }
        Ok(())
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dups: Vec<&str> = ids.filter(|id| !seen.insert(*id)).collect();
    dups.sort_unstable();
    dups.dedup();
    dups
}

pub fn validate_instance(instance: &Instance) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    if instance.locations.is_empty() {
        report.push("empty-locations", "instance has no locations".into());
    }
    if instance.items.is_empty() {
        report.push("empty-items", "instance has no items".into());
    }
    for (what, dups) in [
        ("location", duplicates(instance.locations.iter().map(|l| l.id.as_str()))),
        (
            "item type",
            duplicates(instance.item_types.iter().map(|t| t.id.as_str())),
        ),
        ("item", duplicates(instance.items.iter().map(|i| i.id.as_str()))),
    ] {
        for id in dups {
            report.push("duplicate-id", format!("{what} id `{id}` is not unique"));
        }
    }
    for l in &instance.locations {
        if l.capacity < 1 {
            report.push(
                "non-positive-capacity",
                format!("location `{}` has capacity {}", l.id, l.capacity),
            );
        }
        if l.base_place_time < 0 || l.per_level_time < 0 {
            report.push(
                "negative-time",
                format!("location `{}` has a negative placement time", l.id),
            );
        }
    }
    for t in &instance.item_types {
        if t.area < 1 {
            report.push("non-positive-area", format!("item type `{}` has area {}", t.id, t.area));
        }
        if t.max_stack_height < 1 {
            report.push(
                "invalid-stack-height",
                format!("item type `{}` has max_stack_height {}", t.id, t.max_stack_height),
            );
        }
    }
    for (i, item) in instance.items.iter().enumerate() {
        if instance.item_type_index[i].is_none() {
            report.push(
                "dangling-type",
                format!("item `{}` references unknown type `{}`", item.id, item.type_id),
            );
        }
    }
    report.finish()
}

pub(crate) fn require_valid(instance: &Instance) -> Result<()> {
    let report = validate_instance(instance);
    if report.feasible {
        Ok(())
    } else {
        Err(Error::InvalidInstance(report.to_string()))
    }
}

/// Checks every structural rule of a complete solution. Pure; never mutates.
pub fn is_feasible(solution: &WopSolution, instance: &Instance) -> Result<FeasibilityReport> {
    if !instance.is_resolved() {
        return Err(Error::InvalidInstance("dangling item type reference".into()));
    }
    if solution.placements.len() > instance.num_items() {
        return Err(Error::MalformedSolution(format!(
            "{} placements for {} items",
            solution.placements.len(),
            instance.num_items()
        )));
    }
    if let Some(p) = solution
        .placements
        .iter()
        .find(|p| p.location >= instance.num_locations())
    {
        return Err(Error::MalformedSolution(format!(
            "unknown location index {}",
            p.location
        )));
    }

    let mut report = FeasibilityReport::default();
    for item in solution.placements.len()..instance.num_items() {
        report.push(
            "incomplete",
            format!("item `{}` has no placement", instance.items[item].id),
        );
    }

    let mut stacks: BTreeMap<(usize, u32), Vec<(u32, usize)>> = BTreeMap::new();
    let mut ground = vec![0i64; instance.num_locations()];
    for (item, p) in solution.placements.iter().enumerate() {
        let ty = instance.item_type(item);
        let loc = &instance.locations[p.location];
        if !instance.eligible(item, p.location) {
            report.push(
                "shelf-prohibited",
                format!(
                    "item `{}` of type `{}` on shelf `{}`",
                    instance.items[item].id, ty.id, loc.id
                ),
            );
        }
        if i64::from(p.level) >= ty.max_stack_height {
            report.push(
                "stack-height",
                format!(
                    "item `{}` at level {} exceeds max height {} of type `{}`",
                    instance.items[item].id, p.level, ty.max_stack_height, ty.id
                ),
            );
        }
        if p.level == 0 {
            ground[p.location] += ty.area;
        }
        stacks.entry((p.location, p.slot)).or_default().push((p.level, item));
    }

    for ((loc, slot), mut members) in stacks {
        members.sort_unstable();
        let where_ = format!("location `{}` slot {slot}", instance.locations[loc].id);
        let first_type = instance.type_index(members[0].1);
        if members.iter().any(|&(_, it)| instance.type_index(it) != first_type) {
            report.push("stack-mixed-type", format!("{where_} mixes item types"));
        }
        let levels_ok = members.iter().enumerate().all(|(k, &(lvl, _))| lvl as usize == k);
        if !levels_ok {
            report.push(
                "stack-contiguity",
                format!(
                    "{where_} has levels {:?}, expected 0..{}",
                    members.iter().map(|m| m.0).collect::<Vec<_>>(),
                    members.len()
                ),
            );
        }
    }

    for (loc, used) in ground.iter().enumerate() {
        let l = &instance.locations[loc];
        if *used > l.capacity {
            report.push(
                "capacity",
                format!("location `{}` ground area {used} exceeds capacity {}", l.id, l.capacity),
            );
        }
    }
    Ok(report.finish())
}

fn require_feasible(solution: &WopSolution, instance: &Instance) -> Result<()> {
    let report = is_feasible(solution, instance)?;
    if report.feasible {
        Ok(())
    } else {
        Err(Error::Infeasible(report.to_string()))
    }
}

pub(crate) fn storage_time(solution: &WopSolution, instance: &Instance) -> i64 {
    solution
        .placements
        .iter()
        .map(|p| {
            let l = &instance.locations[p.location];
            l.base_place_time + i64::from(p.level) * l.per_level_time
        })
        .sum()
}

pub(crate) fn ground_area(solution: &WopSolution, instance: &Instance) -> i64 {
    solution
        .placements
        .iter()
        .enumerate()
        .filter(|(_, p)| p.level == 0)
        .map(|(i, _)| instance.area(i))
        .sum()
}

/// Total storage time: per item, the location's base time plus one
/// per-level increment for every level above ground.
pub fn objective_o1(solution: &WopSolution, instance: &Instance) -> Result<i64> {
    require_feasible(solution, instance)?;
    Ok(storage_time(solution, instance))
}

/// Total occupied ground area: the sum of areas of level-0 items.
pub fn objective_o2(solution: &WopSolution, instance: &Instance) -> Result<i64> {
    require_feasible(solution, instance)?;
    Ok(ground_area(solution, instance))
}

/// Order- and slot-label-independent identity of a solution.
///
/// Per location (ascending index): the sorted multiset of stacks, each stack
/// being its sorted `(item, level)` list.
pub fn canonical_key(solution: &WopSolution) -> Vec<u8> {
    let mut stacks: BTreeMap<(usize, u32), Vec<(u32, u32)>> = BTreeMap::new();
    for (item, p) in solution.placements.iter().enumerate() {
        stacks
            .entry((p.location, p.slot))
            .or_default()
            .push((item as u32, p.level));
    }
    let mut per_location: BTreeMap<usize, Vec<Vec<(u32, u32)>>> = BTreeMap::new();
    for ((loc, _), mut members) in stacks {
        members.sort_unstable();
        per_location.entry(loc).or_default().push(members);
    }
    let mut key = Vec::with_capacity(solution.placements.len() * 8 + 16);
    let mut put = |v: u32| key.extend_from_slice(&v.to_be_bytes());
    for (loc, mut loc_stacks) in per_location {
        loc_stacks.sort_unstable();
        put(loc as u32);
        put(loc_stacks.len() as u32);
        for s in loc_stacks {
            put(s.len() as u32);
            for (item, level) in s {
                put(item);
                put(level);
            }
        }
    }
    key
}

/// Linear aggregation weights for (storage time, ground area).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weights {
    #[serde(with = "rational")]
    pub time: Rational,
    #[serde(with = "rational")]
    pub area: Rational,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            time: rational::int(1),
            area: rational::int(1),
        }
    }
}

impl Weights {
    pub fn new(time: Rational, area: Rational) -> Self {
        Weights { time, area }
    }

    pub fn check(&self) -> Result<()> {
        let non_neg = rational::is_non_negative(&self.time) && rational::is_non_negative(&self.area);
        if !non_neg || (self.time == rational::int(0) && self.area == rational::int(0)) {
            return Err(Error::InvalidWeights);
        }
        Ok(())
    }

    /// Integer weights over a common denominator; the sign of
    /// `t * d_time + a * d_area` then matches the sign of the rational score delta.
    pub(crate) fn integer_scaled(&self) -> (i128, i128) {
        let den = num_integer::lcm(*self.time.denom(), *self.area.denom());
        let t = *self.time.numer() as i128 * (den / self.time.denom()) as i128;
        let a = *self.area.numer() as i128 * (den / self.area.denom()) as i128;
        (t, a)
    }
}

pub fn scalarize(o1: i64, o2: i64, weights: &Weights) -> Result<Rational> {
    weights.check()?;
    Ok(weights.time * rational::int(o1) + weights.area * rational::int(o2))
}

/// The small fixture used throughout the tests and documentation.
pub mod fixtures {
    use super::*;

    /// Two locations (a floor and a shelf), stackable type `A` (area 3, h=2,
    /// shelf allowed) and non-stackable type `B` (area 5, floor only); items
    /// `a1`, `a2`, `a3` of type `A` and `b1` of type `B`.
    pub fn t1() -> Instance {
        Instance::new(
            "T1",
            vec![
                Location {
                    id: "Floor".into(),
                    capacity: 10,
                    kind: LocationKind::Floor,
                    base_place_time: 5,
                    per_level_time: 2,
                },
                Location {
                    id: "Shelf".into(),
                    capacity: 4,
                    kind: LocationKind::Shelf,
                    base_place_time: 3,
                    per_level_time: 1,
                },
            ],
            vec![
                ItemType {
                    id: "A".into(),
                    area: 3,
                    shelf_allowed: true,
                    max_stack_height: 2,
                },
                ItemType {
                    id: "B".into(),
                    area: 5,
                    shelf_allowed: false,
                    max_stack_height: 1,
                },
            ],
            vec![
                Item {
                    id: "a1".into(),
                    type_id: "A".into(),
                },
                Item {
                    id: "a2".into(),
                    type_id: "A".into(),
                },
                Item {
                    id: "a3".into(),
                    type_id: "A".into(),
                },
                Item {
                    id: "b1".into(),
                    type_id: "B".into(),
                },
            ],
        )
    }

    pub const FLOOR: usize = 0;
    pub const SHELF: usize = 1;
    pub const A1: usize = 0;
    pub const A2: usize = 1;
    pub const A3: usize = 2;
    pub const B1: usize = 3;

    /// b1@Floor slot0; a1@Floor slot1 lvl0; a3@Floor slot1 lvl1; a2@Shelf slot0.
    pub fn s1() -> WopSolution {
        let mut p = vec![Placement::new(0, 0, 0); 4];
        p[B1] = Placement::new(FLOOR, 0, 0);
        p[A1] = Placement::new(FLOOR, 1, 0);
        p[A3] = Placement::new(FLOOR, 1, 1);
        p[A2] = Placement::new(SHELF, 0, 0);
        WopSolution::new(p)
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn t1_validates() {
        let r = validate_instance(&t1());
        assert!(r.feasible, "{r}");
        assert!(r.violations.is_empty());
    }

    #[test]
    fn duplicate_location_id() {
        let base = t1();
        let mut locs = base.locations().to_vec();
        locs[1].id = "Floor".into();
        let inst = Instance::new("dup", locs, base.item_types().to_vec(), base.items().to_vec());
        let r = validate_instance(&inst);
        assert!(!r.feasible);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, "duplicate-id");
    }

    #[test]
    fn zero_area_reported() {
        let base = t1();
        let mut types = base.item_types().to_vec();
        types[0].area = 0;
        let inst = Instance::new("z", base.locations().to_vec(), types, base.items().to_vec());
        let r = validate_instance(&inst);
        assert!(!r.feasible);
        assert!(r.has_rule("non-positive-area"));
    }

    #[test]
    fn dangling_type_and_bad_height() {
        let base = t1();
        let mut types = base.item_types().to_vec();
        types[1].max_stack_height = 0;
        let mut items = base.items().to_vec();
        items[0].type_id = "Z".into();
        let inst = Instance::new("d", base.locations().to_vec(), types, items);
        let r = validate_instance(&inst);
        assert!(r.has_rule("dangling-type"));
        assert!(r.has_rule("invalid-stack-height"));
    }

    #[test]
    fn s1_feasible_and_objectives() {
        let inst = t1();
        let s1 = s1();
        assert!(is_feasible(&s1, &inst).unwrap().feasible);
        assert_eq!(objective_o1(&s1, &inst).unwrap(), 20);
        assert_eq!(objective_o2(&s1, &inst).unwrap(), 11);
    }

    #[test]
    fn stack_height_violation() {
        let inst = t1();
        let mut s = s1();
        s.placements[A3].level = 2;
        let r = is_feasible(&s, &inst).unwrap();
        assert!(!r.feasible);
        assert!(r.has_rule("stack-height"));
        assert!(objective_o1(&s, &inst).is_err());
    }

    #[test]
    fn shelf_prohibited_violation() {
        let inst = t1();
        let mut s = s1();
        s.placements[B1] = Placement::new(SHELF, 5, 0);
        let r = is_feasible(&s, &inst).unwrap();
        assert!(r.has_rule("shelf-prohibited"));
    }

    #[test]
    fn mixed_stack_and_gap() {
        let inst = t1();
        let mut s = s1();
        // b1 onto a1's stack at level 2 -> mixed type, height, and gap-free though
        s.placements[B1] = Placement::new(FLOOR, 1, 3);
        let r = is_feasible(&s, &inst).unwrap();
        assert!(r.has_rule("stack-mixed-type"));
        assert!(r.has_rule("stack-contiguity"));
    }

    #[test]
    fn malformed_location_is_error() {
        let inst = t1();
        let mut s = s1();
        s.placements[A1].location = 9;
        assert!(matches!(is_feasible(&s, &inst), Err(Error::MalformedSolution(_))));
    }

    #[test]
    fn unstacked_a3_area() {
        let inst = t1();
        let mut s = s1();
        s.placements[A3] = Placement::new(FLOOR, 2, 0);
        // 10 capacity: b1 5 + a1 3 + a3 3 = 11 > 10, so check area arithmetic directly
        assert_eq!(ground_area(&s, &inst), 14);
        assert_eq!(storage_time(&s, &inst), 18);
    }

    #[test]
    fn single_item_o1() {
        let base = t1();
        let inst = Instance::new(
            "one",
            base.locations().to_vec(),
            base.item_types().to_vec(),
            vec![base.items()[3].clone()],
        );
        let s = WopSolution::new(vec![Placement::new(FLOOR, 0, 0)]);
        assert_eq!(objective_o1(&s, &inst).unwrap(), 5);
    }

    #[test]
    fn canonical_key_slot_relabel() {
        let s = s1();
        let mut r = s.clone();
        for p in r.placements.iter_mut().filter(|p| p.location == FLOOR) {
            p.slot = 1 - p.slot;
        }
        assert_eq!(canonical_key(&s), canonical_key(&r));
        let mut u = s.clone();
        u.placements[A3] = Placement::new(FLOOR, 2, 0);
        assert_ne!(canonical_key(&s), canonical_key(&u));
    }

    #[test]
    fn scalarize_examples() {
        let w = |a, b| Weights::new(rational::int(a), rational::int(b));
        assert_eq!(scalarize(20, 11, &w(1, 1)).unwrap(), rational::int(31));
        assert_eq!(scalarize(20, 11, &w(1, 0)).unwrap(), rational::int(20));
        assert_eq!(scalarize(20, 11, &w(0, 1)).unwrap(), rational::int(11));
        assert!(scalarize(20, 11, &w(0, 0)).is_err());
    }

    #[test]
    fn solution_doc_round_trip() {
        let inst = t1();
        let doc = s1().to_doc(&inst);
        let back = WopSolution::from_doc(&doc, &inst).unwrap().unwrap();
        assert_eq!(back, s1());
        let mut partial = doc.clone();
        partial.remove("a2");
        assert_eq!(
            WopSolution::from_doc(&partial, &inst).unwrap(),
            Err(vec!["a2".to_string()])
        );
        let mut bad = doc;
        bad.get_mut("a1").unwrap().location = "Roof".into();
        assert!(WopSolution::from_doc(&bad, &inst).is_err());
    }

    #[test]
    fn instance_json_rejects_unknown_keys() {
        let json = t1().to_json();
        assert_eq!(Instance::from_json(&json).unwrap(), t1());
        let extra = json.replacen("\"name\"", "\"colour\": 1, \"name\"", 1);
        assert!(Instance::from_json(&extra).is_err());
    }
}
