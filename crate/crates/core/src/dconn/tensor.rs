//! Dense tensor fields in the adapted frame and their h-/v-covariant
//! derivatives.
//!
//! Index order is always: horizontal upper (`δ̃`), horizontal lower
//! (`dx̃`), vertical upper (`∂̇̃`), vertical lower (`δỹ`).

use super::DConnection;
use crate::error::{Error, Result};
use crate::expr::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub hu: usize,
    pub hl: usize,
    pub vu: usize,
    pub vl: usize,
}

impl Signature {
    pub const fn new(hu: usize, hl: usize, vu: usize, vl: usize) -> Self {
        Signature { hu, hl, vu, vl }
    }

    pub fn order(&self) -> usize {
        self.hu + self.hl + self.vu + self.vl
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    pub sig: Signature,
    pub r: usize,
    pub comps: Vec<Expr>,
}

/// All multi-indices of length `n` over `0..r`, last index fastest.
pub fn multi_indices(n: usize, r: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = r.pow(n as u32);
    (0..total).map(move |mut k| {
        let mut idx = vec![0; n];
        for slot in idx.iter_mut().rev() {
            *slot = k % r;
            k /= r;
        }
        idx
    })
}

impl TensorField {
    pub fn new(sig: Signature, r: usize, comps: Vec<Expr>) -> Result<Self> {
        let want = r.pow(sig.order() as u32);
        if comps.len() != want {
            return Err(Error::Dimension(format!("tensor needs {want} components, got {}", comps.len())));
        }
        Ok(TensorField { sig, r, comps })
    }

    pub fn from_fn(sig: Signature, r: usize, mut f: impl FnMut(&[usize]) -> Expr) -> Self {
        let comps = multi_indices(sig.order(), r).map(|i| f(&i)).collect();
        TensorField { sig, r, comps }
    }

    pub fn scalar(f: Expr, r: usize) -> Self {
        TensorField { sig: Signature::new(0, 0, 0, 0), r, comps: vec![f] }
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.sig.order());
        idx.iter().fold(0, |acc, &i| acc * self.r + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.comps[self.flat(idx)]
    }

    fn same_shape(&self, o: &TensorField) -> Result<()> {
        if self.sig != o.sig || self.r != o.r {
            return Err(Error::Signature(format!("{:?} vs {:?}", self.sig, o.sig)));
        }
        Ok(())
    }

    pub fn add(&self, o: &TensorField) -> Result<TensorField> {
        self.same_shape(o)?;
        Ok(TensorField {
            sig: self.sig,
            r: self.r,
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, o: &TensorField) -> Result<TensorField> {
        self.same_shape(o)?;
        Ok(TensorField {
            sig: self.sig,
            r: self.r,
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a - b).collect(),
        })
    }

    /// Tensor product; the index blocks of both factors are concatenated
    /// block by block.
    pub fn product(&self, o: &TensorField) -> Result<TensorField> {
        if self.r != o.r {
            return Err(Error::Dimension("tensor ranks differ".into()));
        }
        let (s, t) = (self.sig, o.sig);
        let sig = Signature::new(s.hu + t.hu, s.hl + t.hl, s.vu + t.vu, s.vl + t.vl);
        Ok(TensorField::from_fn(sig, self.r, |idx| {
            let mut i = Vec::with_capacity(s.order());
            let mut j = Vec::with_capacity(t.order());
            let mut pos = 0;
            for (a, b) in [(s.hu, t.hu), (s.hl, t.hl), (s.vu, t.vu), (s.vl, t.vl)] {
                i.extend_from_slice(&idx[pos..pos + a]);
                j.extend_from_slice(&idx[pos + a..pos + a + b]);
                pos += a + b;
            }
            self.get(&i) * o.get(&j)
        }))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Horizontal,
    Vertical,
}

fn derive(dc: &DConnection, t: &TensorField, dir: Direction) -> TensorField {
    let s = t.sig;
    let r = t.r;
    let (sig, insert_at) = match dir {
        Direction::Horizontal => (Signature::new(s.hu, s.hl + 1, s.vu, s.vl), s.hu + s.hl),
        Direction::Vertical => (Signature::new(s.hu, s.hl, s.vu, s.vl + 1), s.order()),
    };
    // Upper/lower coefficient tables for the h- and v-blocks.
    let (ch, cv) = match dir {
        Direction::Horizontal => (&dc.h, &dc.ht),
        Direction::Vertical => (&dc.v, &dc.vt),
    };
    TensorField::from_fn(sig, r, |idx| {
        let c = idx[insert_at];
        let mut old: Vec<usize> = idx.to_vec();
        old.remove(insert_at);
        let base = t.get(&old);
        let mut terms = vec![match dir {
            Direction::Horizontal => dc.conn.delta_action(c, base),
            Direction::Vertical => base.dy(c),
        }];
        let blocks = [
            (0, s.hu, true, ch),
            (s.hu, s.hl, false, ch),
            (s.hu + s.hl, s.vu, true, cv),
            (s.hu + s.hl + s.vu, s.vl, false, cv),
        ];
        for (start, len, upper, coef) in blocks {
            for k in start..start + len {
                let fixed = old[k];
                for e in 0..r {
                    let w = if upper { coef.get(fixed, e, c) } else { coef.get(e, fixed, c) };
                    if w.is_zero() {
                        continue;
                    }
                    let mut sw = old.clone();
                    sw[k] = e;
                    let val = t.get(&sw);
                    if val.is_zero() {
                        continue;
                    }
                    let term = w * val;
                    terms.push(if upper { term } else { -term });
                }
            }
        }
        Expr::sum(terms)
    })
}

/// `T_{|c}` with `c` appended to the horizontal lower block.
pub fn h_deriv(dc: &DConnection, t: &TensorField) -> TensorField {
    derive(dc, t, Direction::Horizontal)
}

/// `T|_c` with `c` appended to the vertical lower block.
pub fn v_deriv(dc: &DConnection, t: &TensorField) -> TensorField {
    derive(dc, t, Direction::Vertical)
}

/// `D_X T = X^c T_{|c} + Ẋ^c T|_c`, where `xh`, `xv` are the adapted-frame
/// coefficients of `X`.
pub fn cov_deriv(dc: &DConnection, xh: &[Expr], xv: &[Expr], t: &TensorField) -> TensorField {
    let hd = h_deriv(dc, t);
    let vd = v_deriv(dc, t);
    let s = t.sig;
    let at = s.hu + s.hl;
    TensorField::from_fn(s, t.r, |idx| {
        let mut terms = Vec::with_capacity(2 * t.r);
        for c in 0..t.r {
            let mut hi = idx.to_vec();
            hi.insert(at, c);
            let mut vi = idx.to_vec();
            vi.push(c);
            terms.push(&xh[c] * hd.get(&hi));
            terms.push(&xv[c] * vd.get(&vi));
        }
        Expr::sum(terms)
    })
}
