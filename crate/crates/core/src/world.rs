//! Object footprints at their current positions, tagged by cost class.

use serde::{Deserialize, Serialize};

use crate::geometry::{polygons_overlap, Polygon, Vec2};
use crate::scene::{Scene, LOW_COST_MAX};
use crate::semantics::CostAssignment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    Low,
    High,
    Target,
}

impl ObjectClass {
    pub fn from_cost(cost: i32) -> Self {
        if cost < 0 {
            ObjectClass::Target
        } else if cost <= LOW_COST_MAX {
            ObjectClass::Low
        } else {
            ObjectClass::High
        }
    }
}

/// The tabletop as seen by planners and the simulator: initial footprints
/// plus a translation per object.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    base: Vec<Polygon>,
    offsets: Vec<Vec2>,
    footprints: Vec<Polygon>,
    classes: Vec<ObjectClass>,
    costs: Vec<i32>,
    names: Vec<String>,
}

impl World {
    /// Objects without an assigned cost are treated as cost 0.
    pub fn new(scene: &Scene, costs: &CostAssignment) -> Self {
        let costs: Vec<i32> = scene
            .objects
            .iter()
            .map(|o| if o.is_target { -1 } else { costs.cost(&o.name).unwrap_or(0) })
            .collect();
        let base: Vec<Polygon> = scene.objects.iter().map(|o| o.footprint.clone()).collect();
        Self {
            offsets: vec![Vec2::ZERO; base.len()],
            footprints: base.clone(),
            classes: costs.iter().map(|&c| ObjectClass::from_cost(c)).collect(),
            base,
            costs,
            names: scene.objects.iter().map(|o| o.name.clone()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn footprint(&self, idx: usize) -> &Polygon {
        &self.footprints[idx]
    }

    pub fn initial_footprint(&self, idx: usize) -> &Polygon {
        &self.base[idx]
    }

    pub fn offset(&self, idx: usize) -> Vec2 {
        self.offsets[idx]
    }

    pub fn class(&self, idx: usize) -> ObjectClass {
        self.classes[idx]
    }

    pub fn cost(&self, idx: usize) -> i32 {
        self.costs[idx]
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn set_offset(&mut self, idx: usize, offset: Vec2) {
        self.offsets[idx] = offset;
        self.footprints[idx] = self.base[idx].translated(offset);
    }

    pub fn translate(&mut self, idx: usize, delta: Vec2) {
        let off = self.offsets[idx] + delta;
        self.set_offset(idx, off);
    }

    pub fn indices_of(&self, class: ObjectClass) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.classes[i] == class)
    }

    /// Other objects overlapping `poly`, skipping `exclude`.
    pub fn overlapping(&self, poly: &Polygon, exclude: Option<usize>) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| Some(j) != exclude && polygons_overlap(poly, &self.footprints[j]))
            .collect()
    }
}
