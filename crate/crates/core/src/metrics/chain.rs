//! Exact maximization of a separable concave objective over a Lipschitz chain.
//!
//! Solves
//!
//! ```text
//! max  Σ_j  q_j h_j² + l_j h_j      (q_j ≤ 0)
//! s.t. |h_j| ≤ B,  |h_{j+1} − h_j| ≤ δ_j
//! ```
//!
//! by dynamic programming over the value function `V_j(h)`, the best partial
//! objective with `h_j = h`. Each `V_j` is concave and piecewise quadratic on
//! `[−B, B]`; passing to the next node takes the max over a window of half
//! width `δ_j`, which for a concave function shifts the part left of the
//! argmax by `−δ_j`, the part right of it by `+δ_j`, and inserts a flat piece
//! at the maximum. The witness is recovered backwards by clamping each
//! stored argmax into the window allowed by its successor.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub quad: f64,
    pub lin: f64,
}

/// `a x² + b x + c` on `[start, next.start]`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    start: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl Piece {
    #[inline]
    fn value(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    #[inline]
    fn slope(&self, x: f64) -> f64 {
        2.0 * self.a * x + self.b
    }

    /// `x ↦ p(x + shift)` starting at `start − shift`.
    fn shifted(&self, shift: f64) -> Piece {
        Piece {
            start: self.start - shift,
            a: self.a,
            b: self.b + 2.0 * self.a * shift,
            c: (self.a * shift + self.b) * shift + self.c,
        }
    }
}

struct ValueFunction {
    bound: f64,
    pieces: Vec<Piece>,
}

impl ValueFunction {
    fn zero(bound: f64) -> Self {
        ValueFunction {
            bound,
            pieces: vec![Piece {
                start: -bound,
                a: 0.0,
                b: 0.0,
                c: 0.0,
            }],
        }
    }

    fn end(&self, i: usize) -> f64 {
        self.pieces.get(i + 1).map_or(self.bound, |p| p.start)
    }

    fn add(&mut self, node: Node) {
        for p in &mut self.pieces {
            p.a += node.quad;
            p.b += node.lin;
        }
    }

    /// Index of the piece holding the maximizer, and the maximizer.
    fn argmax(&self) -> (usize, f64) {
        for (i, p) in self.pieces.iter().enumerate() {
            let end = self.end(i);
            if p.slope(end) <= 0.0 {
                if p.slope(p.start) <= 0.0 {
                    return (i, p.start);
                }
                // a < 0 here since the slope changes sign inside the piece
                let x = (-p.b / (2.0 * p.a)).clamp(p.start, end);
                return (i, x);
            }
        }
        (self.pieces.len() - 1, self.bound)
    }

    fn dilate(&mut self, delta: f64, at: (usize, f64)) {
        let (k, xstar) = at;
        let top = self.pieces[k].value(xstar);
        let mut out = Vec::with_capacity(self.pieces.len() + 2);
        for (i, p) in self.pieces.iter().enumerate().take(k + 1) {
            if i == k && p.start >= xstar {
                break;
            }
            out.push(p.shifted(delta));
        }
        out.push(Piece {
            start: xstar - delta,
            a: 0.0,
            b: 0.0,
            c: top,
        });
        let mut right = self.pieces[k];
        right.start = xstar;
        if xstar < self.end(k) {
            out.push(right.shifted(-delta));
        }
        for p in &self.pieces[k + 1..] {
            out.push(p.shifted(-delta));
        }

        let lo = -self.bound;
        let first_kept = out
            .iter()
            .enumerate()
            .skip(1)
            .take_while(|(_, p)| p.start <= lo)
            .last()
            .map_or(0, |(i, _)| i);
        out.drain(..first_kept);
        out[0].start = lo;
        while out.len() > 1 && out.last().is_some_and(|p| p.start >= self.bound) {
            out.pop();
        }
        self.pieces = out;
    }
}

/// Optimal witness vector and its objective value.
pub(crate) fn maximize(nodes: &[Node], gaps: &[f64], bound: f64) -> (Vec<f64>, f64) {
    let m = nodes.len();
    debug_assert_eq!(gaps.len() + 1, m.max(1));
    if m == 0 {
        return (Vec::new(), 0.0);
    }
    let mut vf = ValueFunction::zero(bound);
    let mut peaks = Vec::with_capacity(m);
    for (j, node) in nodes.iter().enumerate() {
        vf.add(*node);
        let at = vf.argmax();
        peaks.push(at.1);
        if j + 1 < m {
            vf.dilate(gaps[j], at);
        }
    }
    let mut h = vec![0.0; m];
    h[m - 1] = peaks[m - 1];
    for j in (0..m - 1).rev() {
        let lo = (h[j + 1] - gaps[j]).max(-bound);
        let hi = (h[j + 1] + gaps[j]).min(bound);
        h[j] = peaks[j].clamp(lo, hi);
    }
    let objective = nodes
        .iter()
        .zip(&h)
        .map(|(n, &x)| (n.quad * x + n.lin) * x)
        .sum();
    (h, objective)
}
