//! Single-layer gated recurrent cell with manual backpropagation.
//!
//! Update equations, with sigmoid gates z (update) and r (reset):
//!
//! ```text
//! z = sigmoid(Wz x + Uz h + bz)
//! r = sigmoid(Wr x + Ur h + br)
//! c = tanh(Wh x + Uh (r * h) + bh)
//! h' = (1 - z) * h + z * c
//! ```
//!
//! Input weights start uniform in +-1/sqrt(fan_in), recurrent weights start
//! orthogonal, biases at zero.

use super::linalg::{axpy, dot, matvec_add, matvec_transpose_add, outer_add};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GruCell {
    pub input_dim: usize,
    pub hidden: usize,
    pub wz: Vec<f64>,
    pub uz: Vec<f64>,
    pub bz: Vec<f64>,
    pub wr: Vec<f64>,
    pub ur: Vec<f64>,
    pub br: Vec<f64>,
    pub wh: Vec<f64>,
    pub uh: Vec<f64>,
    pub bh: Vec<f64>,
}

/// Reusable buffers for a forward step.
#[derive(Debug)]
pub(crate) struct GruScratch {
    az: Vec<f64>,
    ar: Vec<f64>,
    ah: Vec<f64>,
    rh: Vec<f64>,
    h_new: Vec<f64>,
}

impl Clone for GruScratch {
    fn clone(&self) -> Self {
        GruScratch {
            az: self.az.clone(),
            ar: self.ar.clone(),
            ah: self.ah.clone(),
            rh: self.rh.clone(),
            h_new: self.h_new.clone(),
        }
    }

    // Buffer contents are transient, so cloning into an existing scratch of
    // the same width must not allocate.
    fn clone_from(&mut self, source: &Self) {
        self.az.clone_from(&source.az);
        self.ar.clone_from(&source.ar);
        self.ah.clone_from(&source.ah);
        self.rh.clone_from(&source.rh);
        self.h_new.clone_from(&source.h_new);
    }
}

impl GruScratch {
    pub fn new(hidden: usize) -> Self {
        GruScratch {
            az: vec![0.0; hidden],
            ar: vec![0.0; hidden],
            ah: vec![0.0; hidden],
            rh: vec![0.0; hidden],
            h_new: vec![0.0; hidden],
        }
    }
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct GruStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct GruGrads {
    pub wz: Vec<f64>,
    pub uz: Vec<f64>,
    pub bz: Vec<f64>,
    pub wr: Vec<f64>,
    pub ur: Vec<f64>,
    pub br: Vec<f64>,
    pub wh: Vec<f64>,
    pub uh: Vec<f64>,
    pub bh: Vec<f64>,
}

impl GruGrads {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        GruGrads {
            wz: vec![0.0; hidden * input_dim],
            uz: vec![0.0; hidden * hidden],
            bz: vec![0.0; hidden],
            wr: vec![0.0; hidden * input_dim],
            ur: vec![0.0; hidden * hidden],
            br: vec![0.0; hidden],
            wh: vec![0.0; hidden * input_dim],
            uh: vec![0.0; hidden * hidden],
            bh: vec![0.0; hidden],
        }
    }

    pub fn reset(&mut self) {
        for t in [
            &mut self.wz, &mut self.uz, &mut self.bz, &mut self.wr, &mut self.ur, &mut self.br,
            &mut self.wh, &mut self.uh, &mut self.bh,
        ] {
            t.fill(0.0);
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl GruCell {
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (input_dim as f64).sqrt();
        let mut input_mat = || -> Vec<f64> {
            (0..hidden * input_dim)
                .map(|_| rng.gen_range(-bound..bound))
                .collect()
        };
        let wz = input_mat();
        let wr = input_mat();
        let wh = input_mat();
        let uz = orthogonal(hidden, rng);
        let ur = orthogonal(hidden, rng);
        let uh = orthogonal(hidden, rng);
        GruCell {
            input_dim,
            hidden,
            wz,
            uz,
            bz: vec![0.0; hidden],
            wr,
            ur,
            br: vec![0.0; hidden],
            wh,
            uh,
            bh: vec![0.0; hidden],
        }
    }

    /// Advances `h` in place.
    pub fn step(&self, h: &mut [f64], x: &[f64], s: &mut GruScratch) {
        self.gates(h, x, s);
        let GruScratch { az, ar: _, ah, h_new, .. } = s;
        for i in 0..self.hidden {
            let z = az[i];
            h_new[i] = (1.0 - z) * h[i] + z * ah[i];
        }
        h.copy_from_slice(h_new);
    }

    /// Advances `h` and returns the activations needed for backprop.
    pub fn step_cached(&self, h: &mut [f64], x: &[f64], s: &mut GruScratch) -> GruStepCache {
        let h_prev = h.to_vec();
        self.gates(h, x, s);
        let cache = GruStepCache {
            x: x.to_vec(),
            h_prev,
            z: s.az.clone(),
            r: s.ar.clone(),
            c: s.ah.clone(),
        };
        for i in 0..self.hidden {
            h[i] = (1.0 - cache.z[i]) * cache.h_prev[i] + cache.z[i] * cache.c[i];
        }
        cache
    }

    /// Computes gate activations into the scratch: az <- z, ar <- r, ah <- c.
    fn gates(&self, h: &[f64], x: &[f64], s: &mut GruScratch) {
        let n = self.hidden;
        s.az.copy_from_slice(&self.bz);
        matvec_add(&self.wz, n, self.input_dim, x, &mut s.az);
        matvec_add(&self.uz, n, n, h, &mut s.az);
        s.ar.copy_from_slice(&self.br);
        matvec_add(&self.wr, n, self.input_dim, x, &mut s.ar);
        matvec_add(&self.ur, n, n, h, &mut s.ar);
        for i in 0..n {
            s.az[i] = sigmoid(s.az[i]);
            s.ar[i] = sigmoid(s.ar[i]);
            s.rh[i] = s.ar[i] * h[i];
        }
        s.ah.copy_from_slice(&self.bh);
        matvec_add(&self.wh, n, self.input_dim, x, &mut s.ah);
        matvec_add(&self.uh, n, n, &s.rh, &mut s.ah);
        for i in 0..n {
            s.ah[i] = s.ah[i].tanh();
        }
    }

    /// One step of backpropagation through time. `dh` is the loss gradient
    /// w.r.t. the post-step hidden state; on return `dh_prev` holds the
    /// gradient w.r.t. the pre-step state.
    pub fn backward_step(
        &self,
        cache: &GruStepCache,
        dh: &[f64],
        grads: &mut GruGrads,
        dh_prev: &mut [f64],
        work: &mut GruBackwardWork,
    ) {
        let n = self.hidden;
        let GruBackwardWork { da, drh, rh, dr } = work;
        dh_prev.fill(0.0);
        // h' = (1-z) h + z c
        for i in 0..n {
            dh_prev[i] += dh[i] * (1.0 - cache.z[i]);
        }
        // Candidate branch.
        for i in 0..n {
            let dc = dh[i] * cache.z[i];
            da[i] = dc * (1.0 - cache.c[i] * cache.c[i]);
            rh[i] = cache.r[i] * cache.h_prev[i];
        }
        outer_add(&mut grads.wh, da, &cache.x);
        outer_add(&mut grads.uh, da, rh);
        axpy(1.0, da, &mut grads.bh);
        drh.fill(0.0);
        matvec_transpose_add(&self.uh, n, n, da, drh);
        for i in 0..n {
            dr[i] = drh[i] * cache.h_prev[i];
            dh_prev[i] += drh[i] * cache.r[i];
        }
        // Update gate.
        for i in 0..n {
            let dz = dh[i] * (cache.c[i] - cache.h_prev[i]);
            da[i] = dz * cache.z[i] * (1.0 - cache.z[i]);
        }
        outer_add(&mut grads.wz, da, &cache.x);
        outer_add(&mut grads.uz, da, &cache.h_prev);
        axpy(1.0, da, &mut grads.bz);
        matvec_transpose_add(&self.uz, n, n, da, dh_prev);
        // Reset gate.
        for i in 0..n {
            da[i] = dr[i] * cache.r[i] * (1.0 - cache.r[i]);
        }
        outer_add(&mut grads.wr, da, &cache.x);
        outer_add(&mut grads.ur, da, &cache.h_prev);
        axpy(1.0, da, &mut grads.br);
        matvec_transpose_add(&self.ur, n, n, da, dh_prev);
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GruBackwardWork {
    da: Vec<f64>,
    drh: Vec<f64>,
    rh: Vec<f64>,
    dr: Vec<f64>,
}

impl GruBackwardWork {
    pub fn new(hidden: usize) -> Self {
        GruBackwardWork {
            da: vec![0.0; hidden],
            drh: vec![0.0; hidden],
            rh: vec![0.0; hidden],
            dr: vec![0.0; hidden],
        }
    }
}

/// Row-orthonormal matrix from modified Gram-Schmidt on a Gaussian draw.
fn orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut m: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(rng)).collect();
    for i in 0..n {
        for _pass in 0..2 {
            for k in 0..i {
                let proj = {
                    let (head, tail) = m.split_at(i * n);
                    dot(&head[k * n..(k + 1) * n], &tail[..n])
                };
                let row_k: Vec<f64> = m[k * n..(k + 1) * n].to_vec();
                axpy(-proj, &row_k, &mut m[i * n..(i + 1) * n]);
            }
        }
        let row = &mut m[i * n..(i + 1) * n];
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        } else {
            row.fill(0.0);
            row[i] = 1.0;
        }
    }
    m
}
