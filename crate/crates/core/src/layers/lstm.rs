use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::glorot_uniform;
use crate::error::{Error, Result};
use crate::numerics::{gemm, sigmoid, Activation, Matrix, Op};

/// The four sub-layers of an LSTM cell, in the order their columns are
/// stored in the fused kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    /// `i_t`, scales what the main layer writes into the long-term state.
    Input,
    /// `f_t`, scales how much of `c_{t-1}` is kept.
    Forget,
    /// `g_t`, the main layer proposing new content.
    Main,
    /// `o_t`, scales how much of the squashed long-term state becomes `h_t`.
    Output,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Main, Gate::Output];

    fn index(self) -> usize {
        match self {
            Gate::Input => 0,
            Gate::Forget => 1,
            Gate::Main => 2,
            Gate::Output => 3,
        }
    }
}

/// Weights of a single gate: input kernel, recurrent kernel and bias.
#[derive(Clone, Debug, PartialEq)]
pub struct GateParams {
    pub w_x: Matrix,
    pub w_h: Matrix,
    pub b: Matrix,
}

/// Short-term (`h`) and long-term (`c`) state of one LSTM layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCellState {
    pub h: Matrix,
    pub c: Matrix,
}

impl LstmCellState {
    pub fn zeros(batch: usize, units: usize) -> Self {
        LstmCellState {
            h: Matrix::zeros(batch, units),
            c: Matrix::zeros(batch, units),
        }
    }

    pub fn new(h: Matrix, c: Matrix) -> Result<Self> {
        if h.shape() != c.shape() {
            return Err(Error::Shape {
                op: "LstmCellState",
                left: h.shape(),
                right: c.shape(),
            });
        }
        Ok(LstmCellState { h, c })
    }
}

/// LSTM layer without peepholes.
///
/// Gate weights are stored fused: `kernel` is `inputs × 4·units`,
/// `recurrent` is `units × 4·units` and `bias` is `1 × 4·units`, with column
/// blocks ordered input, forget, main, output. The three gates use the
/// logistic sigmoid; `cell_activation` is used for the main layer and for
/// squashing `c_t` into `h_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub(crate) kernel: Matrix,
    pub(crate) recurrent: Matrix,
    pub(crate) bias: Matrix,
    pub(crate) cell_activation: Activation,
}

/// Everything the backward pass needs from one forward step.
#[derive(Clone, Debug)]
pub(crate) struct LstmStepCache {
    /// Post-activation gate values `[i | f | g | o]`, `batch × 4·units`.
    pub gates: Matrix,
    pub c: Matrix,
    /// `cell_activation(c)`.
    pub c_act: Matrix,
    pub h: Matrix,
}

impl LstmLayer {
    pub fn new(kernel: Matrix, recurrent: Matrix, bias: Matrix, cell_activation: Activation) -> Result<Self> {
        let layer = LstmLayer {
            kernel,
            recurrent,
            bias,
            cell_activation,
        };
        layer.validate()?;
        Ok(layer)
    }

    /// Assembles a layer from per-gate weights.
    pub fn from_gates(
        input: GateParams,
        forget: GateParams,
        main: GateParams,
        output: GateParams,
        cell_activation: Activation,
    ) -> Result<Self> {
        let units = input.w_x.cols();
        let inputs = input.w_x.rows();
        let mut kernel = Matrix::zeros(inputs, 4 * units);
        let mut recurrent = Matrix::zeros(units, 4 * units);
        let mut bias = Matrix::zeros(1, 4 * units);
        for (gate, p) in [(Gate::Input, input), (Gate::Forget, forget), (Gate::Main, main), (Gate::Output, output)] {
            if p.w_x.shape() != (inputs, units) || p.w_h.shape() != (units, units) || p.b.shape() != (1, units) {
                return Err(Error::Shape {
                    op: "LstmLayer::from_gates",
                    left: (inputs, units),
                    right: p.w_x.shape(),
                });
            }
            let start = gate.index() * units;
            kernel.set_col_block(start, &p.w_x);
            recurrent.set_col_block(start, &p.w_h);
            bias.set_col_block(start, &p.b);
        }
        LstmLayer::new(kernel, recurrent, bias, cell_activation)
    }

    /// Glorot-uniform kernels, zero biases except the forget gate at 1.
    pub fn init<R: Rng + ?Sized>(rng: &mut R, inputs: usize, units: usize, cell_activation: Activation) -> Self {
        let kernel = glorot_uniform(rng, inputs, 4 * units);
        let recurrent = glorot_uniform(rng, units, 4 * units);
        let mut bias = Matrix::zeros(1, 4 * units);
        for j in 0..units {
            bias.set(0, Gate::Forget.index() * units + j, 1.0);
        }
        LstmLayer {
            kernel,
            recurrent,
            bias,
            cell_activation,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let four_units = self.kernel.cols();
        if four_units % 4 != 0 || four_units == 0 {
            return Err(Error::config(format!(
                "LSTM kernel width {four_units} is not a positive multiple of 4"
            )));
        }
        let units = four_units / 4;
        if self.recurrent.shape() != (units, four_units) {
            return Err(Error::Shape {
                op: "LstmLayer recurrent kernel",
                left: self.kernel.shape(),
                right: self.recurrent.shape(),
            });
        }
        if self.bias.shape() != (1, four_units) {
            return Err(Error::Shape {
                op: "LstmLayer bias",
                left: self.kernel.shape(),
                right: self.bias.shape(),
            });
        }
        if self.cell_activation == Activation::Softmax {
            return Err(Error::config("softmax is not supported as an LSTM cell activation"));
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.kernel.rows()
    }

    pub fn units(&self) -> usize {
        self.kernel.cols() / 4
    }

    pub fn cell_activation(&self) -> Activation {
        self.cell_activation
    }

    pub fn gate(&self, gate: Gate) -> GateParams {
        let units = self.units();
        let start = gate.index() * units;
        GateParams {
            w_x: self.kernel.col_block(start, units),
            w_h: self.recurrent.col_block(start, units),
            b: self.bias.col_block(start, units),
        }
    }

    pub(crate) fn step_unchecked(&self, x_t: &Matrix, prev: Option<(&Matrix, &Matrix)>) -> LstmStepCache {
        let batch = x_t.rows();
        let units = self.units();
        let mut gates = Matrix::zeros(batch, 4 * units);
        gates.add_row_in_place(&self.bias);
        gemm(1.0, x_t, Op::N, &self.kernel, Op::N, 1.0, &mut gates);
        if let Some((h_prev, _)) = prev {
            gemm(1.0, h_prev, Op::N, &self.recurrent, Op::N, 1.0, &mut gates);
        }
        let act = self.cell_activation;
        let mut c = Matrix::zeros(batch, units);
        let mut c_act = Matrix::zeros(batch, units);
        let mut h = Matrix::zeros(batch, units);
        let c_prev = prev.map(|(_, c)| c.as_slice());
        {
            let g = gates.as_mut_slice();
            let (cs, cas, hs) = (c.as_mut_slice(), c_act.as_mut_slice(), h.as_mut_slice());
            for r in 0..batch {
                let row = &mut g[r * 4 * units..(r + 1) * 4 * units];
                for j in 0..units {
                    let i = sigmoid(row[j]);
                    let f = sigmoid(row[units + j]);
                    let gv = act.scalar(row[2 * units + j]);
                    let o = sigmoid(row[3 * units + j]);
                    row[j] = i;
                    row[units + j] = f;
                    row[2 * units + j] = gv;
                    row[3 * units + j] = o;
                    let k = r * units + j;
                    let carried = c_prev.map_or(0.0, |cp| f * cp[k]);
                    let cv = carried + i * gv;
                    let ca = act.scalar(cv);
                    cs[k] = cv;
                    cas[k] = ca;
                    hs[k] = o * ca;
                }
            }
        }
        LstmStepCache { gates, c, c_act, h }
    }

    /// One LSTM step for a whole batch, returning the output (`h_t`) and the
    /// new state.
    pub fn step(&self, x_t: &Matrix, state: &LstmCellState) -> Result<(Matrix, LstmCellState)> {
        if x_t.cols() != self.inputs() {
            return Err(Error::Shape {
                op: "lstm_step input",
                left: x_t.shape(),
                right: self.kernel.shape(),
            });
        }
        let expect = (x_t.rows(), self.units());
        if state.h.shape() != expect || state.c.shape() != expect {
            return Err(Error::Shape {
                op: "lstm_step state",
                left: state.h.shape(),
                right: expect,
            });
        }
        let cache = self.step_unchecked(x_t, Some((&state.h, &state.c)));
        let h = cache.h.ensure_finite("lstm_step")?;
        let c = cache.c.ensure_finite("lstm_step")?;
        Ok((h.clone(), LstmCellState { h, c }))
    }

    /// Backpropagation through time.
    ///
    /// `dhs[t]` is the gradient arriving at `h_t` from the layer above.
    /// Gradients accumulate into `grads = [d_kernel, d_recurrent, d_bias]`.
    pub(crate) fn backward(
        &self,
        xs: &[Matrix],
        steps: &[LstmStepCache],
        dhs: &[Option<Matrix>],
        grads: &mut [Matrix],
        want_dx: bool,
    ) -> Vec<Matrix> {
        let n = xs.len();
        let batch = xs[0].rows();
        let units = self.units();
        let act = self.cell_activation;
        let [dk, dr, db] = grads else {
            unreachable!("LSTM has three parameter groups")
        };
        let mut dx = Vec::new();
        if want_dx {
            dx = vec![Matrix::zeros(batch, self.inputs()); n];
        }
        let mut dh_next = Matrix::zeros(batch, units);
        let mut dc_next = Matrix::zeros(batch, units);
        let mut dz = Matrix::zeros(batch, 4 * units);
        for t in (0..n).rev() {
            let s = &steps[t];
            let c_prev = (t > 0).then(|| steps[t - 1].c.as_slice());
            {
                let dzs = dz.as_mut_slice();
                let dhn = dh_next.as_slice();
                let up = dhs[t].as_ref().map(|m| m.as_slice());
                let dcn = dc_next.as_mut_slice();
                let (gates, ca) = (s.gates.as_slice(), s.c_act.as_slice());
                for r in 0..batch {
                    for j in 0..units {
                        let k = r * units + j;
                        let gbase = r * 4 * units;
                        let i = gates[gbase + j];
                        let f = gates[gbase + units + j];
                        let g = gates[gbase + 2 * units + j];
                        let o = gates[gbase + 3 * units + j];
                        let dh = dhn[k] + up.map_or(0.0, |u| u[k]);
                        let d_o = dh * ca[k];
                        let dc = dcn[k] + dh * o * act.scalar_derivative_from_output(ca[k]);
                        let d_i = dc * g;
                        let d_g = dc * i;
                        let d_f = c_prev.map_or(0.0, |cp| dc * cp[k]);
                        dcn[k] = dc * f;
                        dzs[gbase + j] = d_i * i * (1.0 - i);
                        dzs[gbase + units + j] = d_f * f * (1.0 - f);
                        dzs[gbase + 2 * units + j] = d_g * act.scalar_derivative_from_output(g);
                        dzs[gbase + 3 * units + j] = d_o * o * (1.0 - o);
                    }
                }
            }
            gemm(1.0, &xs[t], Op::T, &dz, Op::N, 1.0, dk);
            db.add_col_sums_of(&dz);
            if t > 0 {
                gemm(1.0, &steps[t - 1].h, Op::T, &dz, Op::N, 1.0, dr);
                gemm(1.0, &dz, Op::N, &self.recurrent, Op::T, 0.0, &mut dh_next);
            }
            if want_dx {
                gemm(1.0, &dz, Op::N, &self.kernel, Op::T, 0.0, &mut dx[t]);
            }
        }
        dx
    }
}
