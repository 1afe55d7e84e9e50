//! Dense potential tables over ordered variable scopes.
//!
//! A table keeps, per scope variable, the list of value indices that are
//! still admissible. Restricting a variable to an observed value physically
//! drops every incompatible cell, so `cells.len()` is always the product of
//! the admissible-list lengths. Cells are laid out mixed-radix with the last
//! scope variable varying fastest.

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTable {
    scope: Vec<usize>,
    allowed: Vec<Vec<usize>>,
    cells: Vec<f64>,
}

impl PotentialTable {
    /// All-ones table over `scope` (sorted ascending) with full value ranges.
    pub fn ones(scope: Vec<usize>, cardinality: impl Fn(usize) -> usize) -> Self {
        debug_assert!(scope.windows(2).all(|w| w[0] < w[1]), "scope must be sorted");
        let allowed: Vec<Vec<usize>> = scope.iter().map(|&v| (0..cardinality(v)).collect()).collect();
        let len = allowed.iter().map(Vec::len).product();
        Self { scope, allowed, cells: vec![1.0; len] }
    }

    pub fn from_parts(scope: Vec<usize>, allowed: Vec<Vec<usize>>, cells: Vec<f64>) -> Self {
        assert_eq!(scope.len(), allowed.len());
        assert_eq!(cells.len(), allowed.iter().map(Vec::len).product::<usize>());
        Self { scope, allowed, cells }
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn allowed(&self) -> &[Vec<usize>] {
        &self.allowed
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [f64] {
        &mut self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.cells.iter().sum()
    }

    pub fn axis_of(&self, var: usize) -> Option<usize> {
        self.scope.binary_search(&var).ok()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.allowed.iter().map(Vec::len).collect()
    }

    /// Cell stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.scope.len()];
        for d in (0..self.scope.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.allowed[d + 1].len();
        }
        strides
    }

    /// Deletes every cell incompatible with `var = value` and repacks.
    ///
    /// Returns the number of cells scanned, which is the pre-restriction
    /// size, or zero when the table does not mention `var` or is already
    /// restricted to `value`.
    ///
    /// # Panics
    /// If `value` is no longer admissible for `var`.
    pub fn restrict(&mut self, var: usize, value: usize) -> usize {
        let Some(axis) = self.axis_of(var) else { return 0 };
        if self.allowed[axis] == [value] {
            return 0;
        }
        let position =
            self.allowed[axis].iter().position(|&v| v == value).expect("restricting to an inadmissible value");
        let scanned = self.cells.len();
        let stride = self.strides()[axis];
        let block = stride * self.allowed[axis].len();
        let mut kept = Vec::with_capacity(scanned / self.allowed[axis].len());
        for chunk in self.cells.chunks_exact(block) {
            kept.extend_from_slice(&chunk[position * stride..(position + 1) * stride]);
        }
        self.cells = kept;
        self.allowed[axis] = vec![value];
        scanned
    }

    /// Sets every cell incompatible with `var = value` to zero without
    /// changing the table's shape. Returns the number of cells scanned.
    pub fn zero_out(&mut self, var: usize, value: usize) -> usize {
        let Some(axis) = self.axis_of(var) else { return 0 };
        let position =
            self.allowed[axis].iter().position(|&v| v == value).expect("zeroing against an inadmissible value");
        let stride = self.strides()[axis];
        let len = self.allowed[axis].len();
        for (i, cell) in self.cells.iter_mut().enumerate() {
            if (i / stride) % len != position {
                *cell = 0.0;
            }
        }
        self.cells.len()
    }

    /// Strides into a table over `target` (a subset of this scope) for each
    /// of this table's axes; zero for axes not in `target`.
    fn projection_strides(&self, target: &PotentialTable) -> Vec<usize> {
        let target_strides = target.strides();
        self.scope
            .iter()
            .enumerate()
            .map(|(axis, var)| match target.axis_of(*var) {
                Some(t) => {
                    debug_assert_eq!(target.allowed[t], self.allowed[axis]);
                    target_strides[t]
                }
                None => 0,
            })
            .collect()
    }

    /// Sums out every variable not in `target_scope`, which must be a sorted
    /// subset of this scope.
    pub fn marginalize(&self, target_scope: &[usize]) -> PotentialTable {
        let allowed: Vec<Vec<usize>> = target_scope
            .iter()
            .map(|v| {
                let axis = self.axis_of(*v).expect("target scope must be a subset");
                self.allowed[axis].clone()
            })
            .collect();
        let len = allowed.iter().map(Vec::len).product();
        let mut out = PotentialTable { scope: target_scope.to_vec(), allowed, cells: vec![0.0; len] };
        let strides = self.projection_strides(&out);
        for_each_projected(&self.dims(), &strides, |src, dst| {
            out.cells[dst] += self.cells[src];
        });
        out
    }

    /// Multiplies this table cell-wise by `numerator / denominator`, both over
    /// the same sub-scope, with `0 / 0` taken as `0`.
    pub fn absorb_ratio(&mut self, numerator: &PotentialTable, denominator: &PotentialTable) {
        debug_assert_eq!(numerator.scope, denominator.scope);
        let ratio: Vec<f64> =
            numerator.cells.iter().zip(&denominator.cells).map(|(&n, &d)| if d == 0.0 { 0.0 } else { n / d }).collect();
        let strides = self.projection_strides(numerator);
        let dims = self.dims();
        let cells = &mut self.cells;
        for_each_projected(&dims, &strides, |src, dst| {
            cells[src] *= ratio[dst];
        });
    }

    /// Unnormalized distribution of `var` over its full value range; values
    /// ruled out by restriction get zero.
    pub fn marginal_of(&self, var: usize, cardinality: usize) -> Vec<f64> {
        let axis = self.axis_of(var).expect("variable not in scope");
        let reduced = self.marginalize(&[var]);
        let mut full = vec![0.0; cardinality];
        for (cell, &value) in reduced.cells.iter().zip(&self.allowed[axis]) {
            full[value] = *cell;
        }
        full
    }

    /// Value at a full assignment (indexed by variable); zero if the
    /// assignment has been removed by restriction.
    pub fn value_at(&self, assignment: &[usize]) -> f64 {
        let strides = self.strides();
        let mut index = 0;
        for (axis, &var) in self.scope.iter().enumerate() {
            match self.allowed[axis].iter().position(|&v| v == assignment[var]) {
                Some(p) => index += p * strides[axis],
                None => return 0.0,
            }
        }
        self.cells[index]
    }
}

/// Walks a dense mixed-radix index space (last axis fastest), calling
/// `f(source_index, target_index)` where the target index advances by
/// `strides[axis]` per step along each axis.
pub(crate) fn for_each_projected(dims: &[usize], strides: &[usize], mut f: impl FnMut(usize, usize)) {
    let total: usize = dims.iter().product();
    if total == 0 {
        return;
    }
    let mut counter = vec![0usize; dims.len()];
    let mut target = 0usize;
    for source in 0..total {
        f(source, target);
        for axis in (0..dims.len()).rev() {
            counter[axis] += 1;
            target += strides[axis];
            if counter[axis] < dims[axis] {
                break;
            }
            target -= strides[axis] * dims[axis];
            counter[axis] = 0;
        }
    }
}
