use rand::distributions::{Distribution, Uniform};

use crate::seeding::Rng;
use crate::Scalar;

use super::AgentError;

/// Layer widths of the two-branch network. Each list starts with its input
/// width; a list with a single entry is an identity branch. The head's input
/// width must equal the sum of the two branch output widths.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NetShape {
    pub grid: Vec<usize>,
    pub inventory: Vec<usize>,
    pub head: Vec<usize>,
}

impl NetShape {
    /// `25C -> 64 -> 64 -> 32`, `C+1 -> 16 -> 16 -> 16`, `48 -> 16 -> n_out`.
    pub fn two_branch(channels: usize, n_out: usize) -> Self {
        Self {
            grid: vec![25 * channels, 64, 64, 32],
            inventory: vec![channels + 1, 16, 16, 16],
            head: vec![48, 16, n_out],
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.grid.is_empty() || self.inventory.is_empty() || self.head.len() < 2 {
            return Err(AgentError::Shape("every branch needs an input width and the head at least one layer".into()));
        }
        let joined = self.grid.last().unwrap() + self.inventory.last().unwrap();
        if self.head[0] != joined {
            return Err(AgentError::Shape(format!("head input {} != branch outputs {joined}", self.head[0])));
        }
        Ok(())
    }

    pub fn grid_input(&self) -> usize {
        self.grid[0]
    }

    pub fn inventory_input(&self) -> usize {
        self.inventory[0]
    }

    pub fn n_out(&self) -> usize {
        *self.head.last().unwrap()
    }

    /// `(fan_in, fan_out)` of every dense layer in declaration order.
    pub fn layers(&self) -> Vec<(usize, usize)> {
        [&self.grid, &self.inventory, &self.head]
            .into_iter()
            .flat_map(|dims| dims.windows(2).map(|w| (w[0], w[1])))
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers().iter().map(|(i, o)| i * o + o).sum()
    }
}

#[derive(Clone, Copy, Debug)]
struct Layer {
    inp: usize,
    out: usize,
    /// Offset of the `out x inp` row-major weight block; bias follows it.
    offset: usize,
    relu: bool,
}

impl Layer {
    fn weights<'a, T>(&self, p: &'a [T]) -> &'a [T] {
        &p[self.offset..self.offset + self.inp * self.out]
    }

    fn bias<'a, T>(&self, p: &'a [T]) -> &'a [T] {
        let b = self.offset + self.inp * self.out;
        &p[b..b + self.out]
    }
}

/// Cached activations of one forward pass.
#[derive(Clone, Debug, Default)]
pub struct Activations<T> {
    batch: usize,
    /// Output of every layer, in declaration order.
    outs: Vec<Vec<T>>,
    /// Concatenated branch outputs (head input).
    joined: Vec<T>,
    scratch_a: Vec<T>,
    scratch_b: Vec<T>,
}

impl<T: Scalar> Activations<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// Two-branch MLP with all parameters in one flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoBranchNet<T> {
    shape: NetShape,
    params: Vec<T>,
}

impl<T: Scalar> TwoBranchNet<T> {
    /// All-zero parameters.
    pub fn zeros(shape: NetShape) -> Result<Self, AgentError> {
        shape.validate()?;
        let n = shape.n_params();
        Ok(Self { shape, params: vec![T::zero(); n] })
    }

    /// He-uniform weights (`U(-sqrt(6/fan_in), sqrt(6/fan_in))`), zero biases.
    pub fn init(shape: NetShape, rng: &mut Rng) -> Result<Self, AgentError> {
        let mut net = Self::zeros(shape)?;
        for layer in net.layout() {
            let bound = (6.0 / layer.inp.max(1) as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            for w in &mut net.params[layer.offset..layer.offset + layer.inp * layer.out] {
                *w = T::lit(dist.sample(rng));
            }
        }
        Ok(net)
    }

    pub fn from_params(shape: NetShape, params: Vec<T>) -> Result<Self, AgentError> {
        shape.validate()?;
        if params.len() != shape.n_params() {
            return Err(AgentError::Shape(format!("expected {} parameters, got {}", shape.n_params(), params.len())));
        }
        Ok(Self { shape, params })
    }

    pub fn shape(&self) -> &NetShape {
        &self.shape
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn layout(&self) -> Vec<Layer> {
        let n_grid = self.shape.grid.len() - 1;
        let n_inv = self.shape.inventory.len() - 1;
        let n_head = self.shape.head.len() - 1;
        let mut offset = 0;
        self.shape
            .layers()
            .into_iter()
            .enumerate()
            .map(|(i, (inp, out))| {
                let relu = i < n_grid + n_inv || i + 1 < n_grid + n_inv + n_head;
                let l = Layer { inp, out, offset, relu };
                offset += inp * out + out;
                l
            })
            .collect()
    }

    /// Batched forward pass. `grid` is `batch x grid_input`, `inventory` is
    /// `batch x inventory_input`, both row-major. Returns `batch x n_out`.
    pub fn forward<'a>(
        &self,
        grid: &[T],
        inventory: &[T],
        batch: usize,
        acts: &'a mut Activations<T>,
    ) -> Result<&'a [T], AgentError> {
        let (gi, ii) = (self.shape.grid_input(), self.shape.inventory_input());
        if grid.len() != batch * gi || inventory.len() != batch * ii {
            return Err(AgentError::Shape(format!(
                "inputs of length {}/{} do not match batch {batch} x ({gi}, {ii})",
                grid.len(),
                inventory.len()
            )));
        }
        let layout = self.layout();
        acts.batch = batch;
        acts.outs.resize_with(layout.len(), Vec::new);
        let n_grid = self.shape.grid.len() - 1;
        let n_inv = self.shape.inventory.len() - 1;

        let head_start = n_grid + n_inv;
        let Activations { outs, joined, .. } = acts;
        for (i, layer) in layout.iter().enumerate() {
            if i == head_start {
                Self::join(&self.shape, grid, inventory, outs, n_grid, n_inv, batch, joined);
            }
            let (before, rest) = outs.split_at_mut(i);
            let input: &[T] = match i {
                0 if n_grid > 0 => grid,
                i if i == n_grid && n_inv > 0 => inventory,
                i if i == head_start => joined,
                _ => &before[i - 1],
            };
            dense_forward(layer, &self.params, input, batch, &mut rest[0]);
        }
        Ok(&acts.outs[layout.len() - 1])
    }

    #[allow(clippy::too_many_arguments)]
    fn join(
        shape: &NetShape,
        grid: &[T],
        inventory: &[T],
        outs: &[Vec<T>],
        n_grid: usize,
        n_inv: usize,
        batch: usize,
        joined: &mut Vec<T>,
    ) {
        let g: &[T] = if n_grid == 0 { grid } else { &outs[n_grid - 1] };
        let v: &[T] = if n_inv == 0 { inventory } else { &outs[n_grid + n_inv - 1] };
        let (gw, vw) = (*shape.grid.last().unwrap(), *shape.inventory.last().unwrap());
        joined.clear();
        joined.reserve(batch * (gw + vw));
        for r in 0..batch {
            joined.extend_from_slice(&g[r * gw..(r + 1) * gw]);
            joined.extend_from_slice(&v[r * vw..(r + 1) * vw]);
        }
    }

    /// Accumulates parameter gradients for the first `rows` rows of the last
    /// forward pass, given `d_out` (`rows x n_out`) = dLoss/dOutput.
    pub fn backward(
        &self,
        grid: &[T],
        inventory: &[T],
        acts: &mut Activations<T>,
        rows: usize,
        d_out: &[T],
        grads: &mut [T],
    ) -> Result<(), AgentError> {
        if rows > acts.batch || d_out.len() != rows * self.shape.n_out() || grads.len() != self.params.len() {
            return Err(AgentError::Shape("backward: gradient buffers do not match the cached pass".into()));
        }
        let layout = self.layout();
        let n_grid = self.shape.grid.len() - 1;
        let n_inv = self.shape.inventory.len() - 1;
        let head_start = n_grid + n_inv;
        let gw = *self.shape.grid.last().unwrap();
        let vw = *self.shape.inventory.last().unwrap();
        let Activations { outs, joined, scratch_a, scratch_b, .. } = acts;

        // Head, from the output layer down to the joined input.
        let mut delta = std::mem::take(scratch_a);
        delta.clear();
        delta.extend_from_slice(d_out);
        let mut next = std::mem::take(scratch_b);
        for i in (head_start..layout.len()).rev() {
            let input: &[T] = if i == head_start { joined } else { &outs[i - 1] };
            dense_backward(&layout[i], &self.params, input, &outs[i], rows, &mut delta, grads, Some(&mut next));
            std::mem::swap(&mut delta, &mut next);
        }
        // `delta` is now dLoss/d(joined), rows x (gw + vw).
        let mut d_grid = Vec::with_capacity(rows * gw);
        let mut d_inv = Vec::with_capacity(rows * vw);
        for r in 0..rows {
            let row = &delta[r * (gw + vw)..(r + 1) * (gw + vw)];
            d_grid.extend_from_slice(&row[..gw]);
            d_inv.extend_from_slice(&row[gw..]);
        }
        for (range, mut d, first_input) in [(0..n_grid, d_grid, grid), (n_grid..head_start, d_inv, inventory)] {
            for i in range.clone().rev() {
                let is_first = i == range.start;
                let input: &[T] = if is_first { first_input } else { &outs[i - 1] };
                let dx = if is_first { None } else { Some(&mut next) };
                dense_backward(&layout[i], &self.params, input, &outs[i], rows, &mut d, grads, dx);
                if !is_first {
                    std::mem::swap(&mut d, &mut next);
                }
            }
        }
        *scratch_a = delta;
        *scratch_b = next;
        Ok(())
    }

    /// Convenience forward for a single observation.
    pub fn forward_one(&self, grid: &[T], inventory: &[T]) -> Result<Vec<T>, AgentError> {
        let mut acts = Activations::default();
        Ok(self.forward(grid, inventory, 1, &mut acts)?.to_vec())
    }
}

fn dense_forward<T: Scalar>(layer: &Layer, params: &[T], x: &[T], batch: usize, y: &mut Vec<T>) {
    let (inp, out) = (layer.inp, layer.out);
    let bias = layer.bias(params);
    y.clear();
    for _ in 0..batch {
        y.extend_from_slice(bias);
    }
    if inp > 0 {
        // y (batch x out) += x (batch x inp) * W^T (inp x out)
        T::gemm(batch, inp, out, T::one(), x, inp, 1, layer.weights(params), 1, inp, T::one(), y, out, 1);
    }
    if layer.relu {
        for v in y.iter_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
    }
}

/// `delta` holds dLoss/dOutput for the first `rows` rows; it is masked by the
/// ReLU in place. Writes dLoss/dInput into `dx` when requested.
#[allow(clippy::too_many_arguments)]
fn dense_backward<T: Scalar>(
    layer: &Layer,
    params: &[T],
    x: &[T],
    y: &[T],
    rows: usize,
    delta: &mut [T],
    grads: &mut [T],
    dx: Option<&mut Vec<T>>,
) {
    let (inp, out) = (layer.inp, layer.out);
    if layer.relu {
        for (d, v) in delta.iter_mut().zip(&y[..rows * out]) {
            if *v <= T::zero() {
                *d = T::zero();
            }
        }
    }
    let (gw, gb) = grads[layer.offset..layer.offset + inp * out + out].split_at_mut(inp * out);
    for r in 0..rows {
        for (g, d) in gb.iter_mut().zip(&delta[r * out..(r + 1) * out]) {
            *g = *g + *d;
        }
    }
    if inp > 0 {
        // dW (out x inp) += delta^T (out x rows) * x (rows x inp)
        T::gemm(out, rows, inp, T::one(), delta, 1, out, x, inp, 1, T::one(), gw, inp, 1);
    }
    if let Some(dx) = dx {
        dx.clear();
        dx.resize(rows * inp, T::zero());
        if inp > 0 {
            // dx (rows x inp) = delta (rows x out) * W (out x inp)
            T::gemm(rows, out, inp, T::one(), delta, out, 1, layer.weights(params), inp, 1, T::zero(), dx, inp, 1);
        }
    }
}
