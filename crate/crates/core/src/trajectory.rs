use serde::Serialize;

use crate::spectral::GridField;

/// Scalars tracked for every stored snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub mass: f64,
    pub l2: f64,
}

impl Diagnostics {
    pub fn of(f: &GridField) -> Self {
        match f.coefficients() {
            Some(c) => {
                let l = f.grid().length();
                Self {
                    mass: l * c[0].re,
                    l2: (l * c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt(),
                }
            }
            None => Self { mass: f.integral(), l2: f.l2_norm() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowUpRecord {
    pub time: f64,
    pub step: usize,
    pub sup_norm: f64,
}

/// Time-indexed snapshots of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<GridField>,
    pub diagnostics: Vec<Diagnostics>,
    pub terminated_early: Option<BlowUpRecord>,
}

impl Trajectory {
    pub fn new(initial: GridField) -> Self {
        let d = Diagnostics::of(&initial);
        Self { times: vec![0.0], snapshots: vec![initial], diagnostics: vec![d], terminated_early: None }
    }

    /// Builds a trajectory from parallel vectors of times and snapshots.
    pub fn from_parts(times: Vec<f64>, snapshots: Vec<GridField>) -> Self {
        assert_eq!(times.len(), snapshots.len());
        let diagnostics = snapshots.iter().map(Diagnostics::of).collect();
        Self { times, snapshots, diagnostics, terminated_early: None }
    }

    /// The same field held at times `0` and `horizon`.
    pub fn constant(field: GridField, horizon: f64) -> Self {
        Self::from_parts(vec![0.0, horizon], vec![field.clone(), field])
    }

    pub fn push(&mut self, time: f64, snapshot: GridField) {
        debug_assert!(self.times.last().map_or(true, |&t| time > t));
        self.diagnostics.push(Diagnostics::of(&snapshot));
        self.times.push(time);
        self.snapshots.push(snapshot);
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> Option<&GridField> {
        self.snapshots.last()
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn horizon(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn map(&self, f: impl Fn(&GridField) -> GridField) -> Self {
        Self::from_parts(self.times.clone(), self.snapshots.iter().map(f).collect())
    }

    /// Snapshot-wise difference; both trajectories must share time stamps.
    pub fn sub(&self, other: &Trajectory) -> Self {
        assert_eq!(self.len(), other.len(), "trajectories differ in length");
        let snaps = self.snapshots.iter().zip(&other.snapshots).map(|(a, b)| a.sub(b)).collect();
        Self::from_parts(self.times.clone(), snaps)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|f| f.scaled(c))
    }

    /// Largest snapshot-wise sup-norm distance to `other`.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| a.sub(b).sup_norm())
            .fold(0.0, f64::max)
    }
}
