use super::ElementSpace;

/// Broken coefficient vector: element `e` owns `values[offsets[e]..offsets[e + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoeffs {
    pub offsets: Vec<usize>,
    pub values: Vec<f64>,
}

impl FieldCoeffs {
    pub fn zeros(spaces: &[ElementSpace]) -> Self {
        let mut offsets = Vec::with_capacity(spaces.len() + 1);
        offsets.push(0);
        for s in spaces {
            offsets.push(offsets.last().unwrap() + s.ndof());
        }
        let n = *offsets.last().unwrap();
        FieldCoeffs { offsets, values: vec![0.0; n] }
    }

    /// Nodal interpolant of `f` on every element.
    pub fn interpolate(spaces: &[ElementSpace], f: impl Fn(&crate::geometry::Vec2) -> f64) -> Self {
        let mut c = Self::zeros(spaces);
        for (e, s) in spaces.iter().enumerate() {
            for (v, x) in c.element_mut(e).iter_mut().zip(s.nodes()) {
                *v = f(x);
            }
        }
        c
    }

    pub fn constant(spaces: &[ElementSpace], value: f64) -> Self {
        let mut c = Self::zeros(spaces);
        c.values.iter_mut().for_each(|v| *v = value);
        c
    }

    pub fn n_elements(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn element(&self, e: usize) -> &[f64] {
        &self.values[self.offsets[e]..self.offsets[e + 1]]
    }

    #[inline]
    pub fn element_mut(&mut self, e: usize) -> &mut [f64] {
        &mut self.values[self.offsets[e]..self.offsets[e + 1]]
    }

    pub fn same_layout(&self, other: &FieldCoeffs) -> bool {
        self.offsets == other.offsets
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
