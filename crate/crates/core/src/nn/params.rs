use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

/// Affine map `x W + b` with `W` stored `in x out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Linear {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub linear: Linear,
    pub norm: Option<NormParams>,
}

/// Every trainable array of a network. Gradients use the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// One table (`categories x dim`) per embedded categorical feature;
    /// `None` where the feature enters one-hot.
    pub embeddings: Vec<Option<Array2<f64>>>,
    pub hidden: Vec<DenseLayer>,
    pub head: Linear,
}

/// Callback of [`MlpParams::zip_mut`]: own slice, other slice, kind.
pub type ZipFn<'a> = dyn FnMut(&mut [f64], &[f64], ParamKind) + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Subject to l1/l2 penalties.
    Weight,
    Bias,
    Norm,
}

fn slice_mut<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) -> &mut [f64] {
    a.as_slice_mut().expect("parameters are contiguous")
}

fn slice<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> &[f64] {
    a.as_slice().expect("parameters are contiguous")
}

impl MlpParams {
    pub fn zeros_like(&self) -> MlpParams {
        let mut z = self.clone();
        z.visit_mut(&mut |s, _| s.fill(0.0));
        z
    }

    /// Visits arrays in a fixed order: embeddings, hidden layers (weight,
    /// bias, gamma, beta), head.
    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64], ParamKind)) {
        for table in self.embeddings.iter_mut().flatten() {
            f(slice_mut(table), ParamKind::Weight);
        }
        for layer in &mut self.hidden {
            f(slice_mut(&mut layer.linear.weight), ParamKind::Weight);
            f(slice_mut(&mut layer.linear.bias), ParamKind::Bias);
            if let Some(n) = &mut layer.norm {
                f(slice_mut(&mut n.gamma), ParamKind::Norm);
                f(slice_mut(&mut n.beta), ParamKind::Norm);
            }
        }
        f(slice_mut(&mut self.head.weight), ParamKind::Weight);
        f(slice_mut(&mut self.head.bias), ParamKind::Bias);
    }

    pub fn visit(&self, f: &mut dyn FnMut(&[f64], ParamKind)) {
        for table in self.embeddings.iter().flatten() {
            f(slice(table), ParamKind::Weight);
        }
        for layer in &self.hidden {
            f(slice(&layer.linear.weight), ParamKind::Weight);
            f(slice(&layer.linear.bias), ParamKind::Bias);
            if let Some(n) = &layer.norm {
                f(slice(&n.gamma), ParamKind::Norm);
                f(slice(&n.beta), ParamKind::Norm);
            }
        }
        f(slice(&self.head.weight), ParamKind::Weight);
        f(slice(&self.head.bias), ParamKind::Bias);
    }

    /// All parameters concatenated in visiting order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit(&mut |s, _| out.extend_from_slice(s));
        out
    }

    /// Kind of every flattened entry.
    pub fn kinds(&self) -> Vec<ParamKind> {
        let mut out = Vec::new();
        self.visit(&mut |s, k| out.extend(std::iter::repeat_n(k, s.len())));
        out
    }

    pub fn assign_flat(&mut self, values: &[f64]) {
        let mut at = 0;
        self.visit_mut(&mut |s, _| {
            s.copy_from_slice(&values[at..at + s.len()]);
            at += s.len();
        });
        assert_eq!(at, values.len(), "flat parameter length mismatch");
    }

    pub fn len(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |s, _| n += s.len());
        n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.embeddings.iter().flatten().map(slice).collect();
        for layer in &self.hidden {
            out.push(slice(&layer.linear.weight));
            out.push(slice(&layer.linear.bias));
            if let Some(n) = &layer.norm {
                out.push(slice(&n.gamma));
                out.push(slice(&n.beta));
            }
        }
        out.push(slice(&self.head.weight));
        out.push(slice(&self.head.bias));
        out
    }

    /// Calls `f(mine, theirs, kind)` on matching arrays of two networks with
    /// the same architecture.
    pub fn zip_mut(&mut self, other: &MlpParams, f: &mut ZipFn<'_>) {
        let theirs = other.slices();
        let mut i = 0;
        self.visit_mut(&mut |s, k| {
            assert_eq!(s.len(), theirs[i].len(), "parameter shape mismatch");
            f(s, theirs[i], k);
            i += 1;
        });
        assert_eq!(i, theirs.len(), "parameter shape mismatch");
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &MlpParams, scale: f64) {
        self.zip_mut(other, &mut |s, o, _| {
            for (v, d) in s.iter_mut().zip(o) {
                *v += scale * d;
            }
        });
    }
}
