//! Single-layer LSTM with a mean head and a softplus std head, forward pass
//! over a segment and reverse-mode gradients through the whole rollout,
//! including the autoregressive feedback of the predicted mean.
//!
//! Flat parameter layout (gate order i, f, g, o):
//! `W (4h x in) | U (4h x h) | b (4h) | w_mu (h) | b_mu | w_sigma (h) | b_sigma`.
//! Everything up to `b_mu` is the mean partition, the rest the std partition.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Net {
    pub n_exo: usize,
    pub hidden: usize,
    pub autoregressive: bool,
    pub sigma_floor: f64,
}

/// Standardized inputs and targets of one segment processed from zero state.
#[derive(Debug, Clone)]
pub(crate) struct Segment {
    /// `T x n_exo`, row-major.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// True target just before the segment (autoregressive models only).
    pub y_prev0: f64,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.y.len()
    }
}

pub(crate) struct Trace {
    v: Vec<f64>,
    gates: Vec<f64>,
    c: Vec<f64>,
    tc: Vec<f64>,
    h: Vec<f64>,
    pub mu: Vec<f64>,
    s: Vec<f64>,
    pub sigma: Vec<f64>,
    fed_back: Vec<bool>,
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of softplus for `y > 0`.
pub(crate) fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

impl Net {
    pub fn in_dim(&self) -> usize {
        self.n_exo + usize::from(self.autoregressive)
    }

    fn off_w(&self) -> usize {
        0
    }
    fn off_u(&self) -> usize {
        4 * self.hidden * self.in_dim()
    }
    fn off_b(&self) -> usize {
        self.off_u() + 4 * self.hidden * self.hidden
    }
    fn off_wmu(&self) -> usize {
        self.off_b() + 4 * self.hidden
    }
    fn off_bmu(&self) -> usize {
        self.off_wmu() + self.hidden
    }
    /// Start of the std-head partition.
    pub fn n_mu(&self) -> usize {
        self.off_bmu() + 1
    }
    fn off_ws(&self) -> usize {
        self.n_mu()
    }
    fn off_bs(&self) -> usize {
        self.off_ws() + self.hidden
    }
    pub fn n_params(&self) -> usize {
        self.off_bs() + 1
    }

    /// Uniform(±1/√h) weights, forget-gate bias +1, zero std-head weights and
    /// a std-head bias giving σ = 1 in standardized units.
    pub fn init(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        let h = self.hidden;
        let k = 1.0 / (h as f64).sqrt();
        let mut p: Vec<f64> = (0..self.n_params()).map(|_| rng.gen_range(-k..k)).collect();
        for j in 0..h {
            p[self.off_b() + h + j] += 1.0;
        }
        for j in 0..h {
            p[self.off_ws() + j] = 0.0;
        }
        p[self.off_bs()] = softplus_inv((1.0 - self.sigma_floor).max(1e-6));
        p
    }

    pub fn forward(&self, p: &[f64], seg: &Segment, horizon: usize) -> Trace {
        let (h, nin, n_exo) = (self.hidden, self.in_dim(), self.n_exo);
        let t_len = seg.len();
        let mut tr = Trace {
            v: vec![0.0; t_len * nin],
            gates: vec![0.0; t_len * 4 * h],
            c: vec![0.0; t_len * h],
            tc: vec![0.0; t_len * h],
            h: vec![0.0; t_len * h],
            mu: vec![0.0; t_len],
            s: vec![0.0; t_len],
            sigma: vec![0.0; t_len],
            fed_back: vec![false; t_len],
        };
        let (w, u, b) = (&p[self.off_w()..], &p[self.off_u()..], &p[self.off_b()..]);
        let (wmu, bmu) = (&p[self.off_wmu()..self.off_wmu() + h], p[self.off_bmu()]);
        let (ws, bs) = (&p[self.off_ws()..self.off_ws() + h], p[self.off_bs()]);
        let mut z = vec![0.0; 4 * h];
        for t in 0..t_len {
            let v = &mut tr.v[t * nin..(t + 1) * nin];
            v[..n_exo].copy_from_slice(&seg.x[t * n_exo..(t + 1) * n_exo]);
            if self.autoregressive {
                let window_start = t % horizon == 0;
                v[n_exo] = if window_start {
                    if t == 0 {
                        seg.y_prev0
                    } else {
                        seg.y[t - 1]
                    }
                } else {
                    tr.mu[t - 1]
                };
                tr.fed_back[t] = !window_start;
            }
            let h_prev = (t > 0).then(|| &tr.h[(t - 1) * h..t * h]);
            for r in 0..4 * h {
                let mut acc = b[r];
                let wr = &w[r * nin..(r + 1) * nin];
                for (a, x) in wr.iter().zip(v.iter()) {
                    acc += a * x;
                }
                if let Some(hp) = h_prev {
                    let ur = &u[r * h..(r + 1) * h];
                    for (a, x) in ur.iter().zip(hp) {
                        acc += a * x;
                    }
                }
                z[r] = acc;
            }
            let g = &mut tr.gates[t * 4 * h..(t + 1) * 4 * h];
            for j in 0..h {
                g[j] = sigmoid(z[j]);
                g[h + j] = sigmoid(z[h + j]);
                g[2 * h + j] = z[2 * h + j].tanh();
                g[3 * h + j] = sigmoid(z[3 * h + j]);
            }
            let mut mu = bmu;
            let mut s = bs;
            for j in 0..h {
                let cp = if t == 0 { 0.0 } else { tr.c[(t - 1) * h + j] };
                let c = g[h + j] * cp + g[j] * g[2 * h + j];
                let tc = c.tanh();
                let hv = g[3 * h + j] * tc;
                tr.c[t * h + j] = c;
                tr.tc[t * h + j] = tc;
                tr.h[t * h + j] = hv;
                mu += wmu[j] * hv;
                s += ws[j] * hv;
            }
            tr.mu[t] = mu;
            tr.s[t] = s;
            tr.sigma[t] = softplus(s) + self.sigma_floor;
        }
        tr
    }

    /// Accumulate `dL/dθ` into `grad` given `dL/dμ_t` and `dL/dσ_t`.
    /// With `tbptt = Some(k)` gradients are cut every `k` steps.
    pub fn backward(
        &self,
        p: &[f64],
        seg: &Segment,
        tr: &Trace,
        dmu: &[f64],
        dsigma: &[f64],
        tbptt: Option<usize>,
        grad: &mut [f64],
    ) {
        let (h, nin) = (self.hidden, self.in_dim());
        let t_len = seg.len();
        let (ow, ou, ob) = (self.off_w(), self.off_u(), self.off_b());
        let (owmu, obmu, ows, obs) = (self.off_wmu(), self.off_bmu(), self.off_ws(), self.off_bs());
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dmu_feedback = 0.0;
        let mut dz = vec![0.0; 4 * h];
        for t in (0..t_len).rev() {
            let cut = tbptt.is_some_and(|k| (t + 1) % k == 0 && t + 1 < t_len);
            if cut {
                dh_next.iter_mut().for_each(|x| *x = 0.0);
                dc_next.iter_mut().for_each(|x| *x = 0.0);
                dmu_feedback = 0.0;
            }
            let dm = dmu[t] + dmu_feedback;
            let ds = dsigma[t] * sigmoid(tr.s[t]);
            let ht = &tr.h[t * h..(t + 1) * h];
            grad[obmu] += dm;
            grad[obs] += ds;
            let g = &tr.gates[t * 4 * h..(t + 1) * 4 * h];
            for j in 0..h {
                grad[owmu + j] += dm * ht[j];
                grad[ows + j] += ds * ht[j];
                let dh = dm * p[owmu + j] + ds * p[ows + j] + dh_next[j];
                let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let tc = tr.tc[t * h + j];
                let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                let cp = if t == 0 { 0.0 } else { tr.c[(t - 1) * h + j] };
                dz[j] = dc * gg * i * (1.0 - i);
                dz[h + j] = dc * cp * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - gg * gg);
                dz[3 * h + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            let v = &tr.v[t * nin..(t + 1) * nin];
            dh_next.iter_mut().for_each(|x| *x = 0.0);
            let mut dv_ar = 0.0;
            for r in 0..4 * h {
                let d = dz[r];
                if d == 0.0 {
                    continue;
                }
                grad[ob + r] += d;
                let gw = &mut grad[ow + r * nin..ow + (r + 1) * nin];
                for (gi, x) in gw.iter_mut().zip(v) {
                    *gi += d * x;
                }
                if self.autoregressive {
                    dv_ar += d * p[ow + r * nin + self.n_exo];
                }
                if t > 0 {
                    let hp = &tr.h[(t - 1) * h..t * h];
                    let row = ou + r * h;
                    for j in 0..h {
                        grad[row + j] += d * hp[j];
                        dh_next[j] += d * p[row + j];
                    }
                }
            }
            dmu_feedback = if tr.fed_back[t] { dv_ar } else { 0.0 };
        }
    }
}
