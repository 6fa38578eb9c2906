//! Mutable stack view of a solution, shared by post-processing and the
//! classical baseline.

use std::collections::BTreeMap;

use crate::model::{Instance, PartialSolution, Placement, WopSolution};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Stack {
    pub location: usize,
    pub slot: u32,
    pub type_index: usize,
    /// Bottom to top.
    pub items: Vec<usize>,
}

impl Stack {
    pub fn height(&self) -> usize {
        self.items.len()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    /// Stacks in (location, slot) order; emptied stacks are removed.
    pub stacks: Vec<Stack>,
    pub ground_used: Vec<i64>,
    next_slot: Vec<u32>,
}

impl Layout {
    pub fn empty(instance: &Instance) -> Self {
        Layout {
            stacks: Vec::new(),
            ground_used: vec![0; instance.num_locations()],
            next_slot: vec![0; instance.num_locations()],
        }
    }

    /// Assumes `solution` is feasible.
    pub fn from_solution(solution: &WopSolution, instance: &Instance) -> Self {
        let mut grouped: BTreeMap<(usize, u32), Vec<(u32, usize)>> = BTreeMap::new();
        for (item, p) in solution.placements.iter().enumerate() {
            grouped.entry((p.location, p.slot)).or_default().push((p.level, item));
        }
        let mut layout = Layout::empty(instance);
        for ((location, slot), mut members) in grouped {
            members.sort_unstable();
            let items: Vec<usize> = members.into_iter().map(|(_, i)| i).collect();
            layout.ground_used[location] += instance.area(items[0]);
            layout.next_slot[location] = layout.next_slot[location].max(slot + 1);
            layout.stacks.push(Stack {
                location,
                slot,
                type_index: instance.type_index(items[0]),
                items,
            });
        }
        layout
    }

    /// One stack per placed ground item, slots numbered in item order.
    pub fn from_partial(partial: &PartialSolution, instance: &Instance) -> Self {
        let mut layout = Layout::empty(instance);
        for (item, loc) in partial.assignments.iter().enumerate() {
            if let Some(loc) = *loc {
                layout.open_stack(item, loc, instance);
            }
        }
        layout.stacks.sort_by_key(|s| (s.location, s.slot));
        layout
    }

    pub fn residual(&self, loc: usize, instance: &Instance) -> i64 {
        instance.locations()[loc].capacity - self.ground_used[loc]
    }

    /// Opens a new footprint for `item` at `loc`; returns the stack index.
    /// Callers must have checked eligibility and residual capacity.
    pub fn open_stack(&mut self, item: usize, loc: usize, instance: &Instance) -> usize {
        let slot = self.next_slot[loc];
        self.next_slot[loc] += 1;
        self.ground_used[loc] += instance.area(item);
        self.stacks.push(Stack {
            location: loc,
            slot,
            type_index: instance.type_index(item),
            items: vec![item],
        });
        self.stacks.len() - 1
    }

    pub fn has_room(&self, stack: usize, instance: &Instance) -> bool {
        let s = &self.stacks[stack];
        (s.height() as i64) < instance.item_types()[s.type_index].max_stack_height
    }

    /// Pops the top item of `stack`. An emptied stack releases its footprint
    /// but keeps its entry until [`Self::compact`].
    pub fn pop(&mut self, stack: usize, instance: &Instance) -> usize {
        let s = &mut self.stacks[stack];
        let item = s.items.pop().expect("non-empty stack");
        if s.items.is_empty() {
            self.ground_used[s.location] -= instance.area(item);
        }
        item
    }

    /// Moves a whole stack to a new footprint at `to`.
    pub fn relocate(&mut self, stack: usize, to: usize, instance: &Instance) {
        let area = instance.item_types()[self.stacks[stack].type_index].area;
        let from = self.stacks[stack].location;
        self.ground_used[from] -= area;
        self.ground_used[to] += area;
        let slot = self.next_slot[to];
        self.next_slot[to] += 1;
        let s = &mut self.stacks[stack];
        s.location = to;
        s.slot = slot;
    }

    /// Undoes the slot allocation of the most recent [`Self::open_stack`] at `loc`.
    pub fn release_slot(&mut self, loc: usize) {
        self.next_slot[loc] -= 1;
    }

    pub fn compact(&mut self) {
        self.stacks.retain(|s| !s.items.is_empty());
    }

    pub fn to_solution(&self, num_items: usize) -> WopSolution {
        let mut placements = vec![Placement::new(usize::MAX, 0, 0); num_items];
        for s in &self.stacks {
            for (level, &item) in s.items.iter().enumerate() {
                placements[item] = Placement::new(s.location, s.slot, level as u32);
            }
        }
        debug_assert!(placements.iter().all(|p| p.location != usize::MAX));
        WopSolution::new(placements)
    }

    /// Non-full stacks of type `ty` ordered by (per-level time, location, slot).
    pub fn cheapest_open_stacks(&self, ty: usize, instance: &Instance) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.stacks.len())
            .filter(|&k| {
                let s = &self.stacks[k];
                s.type_index == ty && !s.items.is_empty() && self.has_room(k, instance)
            })
            .collect();
        idx.sort_by_key(|&k| {
            let s = &self.stacks[k];
            (instance.locations()[s.location].per_level_time, s.location, s.slot)
        });
        idx
    }
}
