use crate::scalar::{Real, C};

use super::TnError;

/// Dense tensor over binary indices. The first index is the most
/// significant bit of the flat offset.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<R: Real> {
    pub indices: Vec<usize>,
    pub data: Vec<C<R>>,
}

/// Per-thread reuse of large buffers; fresh pages are expensive to fault
/// in and big intermediates come and go at every step.
pub(crate) mod pool {
    use std::any::Any;
    use std::cell::RefCell;

    use crate::scalar::{Real, C};

    const MIN_LEN: usize = 1 << 16;
    const MAX_BYTES: usize = 1 << 30;

    thread_local! {
        static POOL: RefCell<Vec<(usize, Box<dyn Any>)>> = const { RefCell::new(Vec::new()) };
    }

    /// Zero-filled vector of length `len`.
    pub(crate) fn zeroed<R: Real>(len: usize) -> Vec<C<R>> {
        let zero = C::new(R::zero(), R::zero());
        if len >= MIN_LEN {
            let found = POOL.with(|p| {
                let mut p = p.borrow_mut();
                let pos = p
                    .iter()
                    .enumerate()
                    .filter(|(_, (_, b))| b.downcast_ref::<Vec<C<R>>>().is_some_and(|v| v.capacity() >= len))
                    .min_by_key(|(_, (bytes, _))| *bytes)
                    .map(|(i, _)| i);
                pos.map(|i| p.swap_remove(i).1)
            });
            if let Some(b) = found {
                let mut v = *b.downcast::<Vec<C<R>>>().expect("checked type");
                v.clear();
                v.resize(len, zero);
                return v;
            }
        }
        vec![zero; len]
    }

    pub(crate) fn recycle<R: Real>(v: Vec<C<R>>) {
        if v.capacity() < MIN_LEN {
            return;
        }
        let bytes = v.capacity() * std::mem::size_of::<C<R>>();
        POOL.with(|p| {
            let mut p = p.borrow_mut();
            p.push((bytes, Box::new(v)));
            // keep the largest buffers within the byte budget
            p.sort_by_key(|(b, _)| std::cmp::Reverse(*b));
            let mut total = 0;
            p.retain(|(b, _)| {
                total += b;
                total <= MAX_BYTES
            });
        });
    }
}

/// Maps the bits of an offset to a new offset through two lookup tables.
pub(crate) struct BitMap {
    lo_bits: usize,
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl BitMap {
    /// `target[p]` is the output bit for source bit `p` (bit 0 = least
    /// significant), or `None` to drop it.
    pub(crate) fn new(target: &[Option<usize>]) -> Self {
        let n = target.len();
        let lo_bits = n / 2;
        let table = |from: usize, count: usize| -> Vec<usize> {
            (0..1usize << count)
                .map(|v| {
                    (0..count).fold(0usize, |acc, b| match target[from + b] {
                        Some(t) if v >> b & 1 == 1 => acc | 1 << t,
                        _ => acc,
                    })
                })
                .collect()
        };
        Self { lo_bits, lo: table(0, lo_bits), hi: table(lo_bits, n - lo_bits) }
    }

    #[inline(always)]
    pub(crate) fn map(&self, off: usize) -> usize {
        self.lo[off & ((1 << self.lo_bits) - 1)] | self.hi[off >> self.lo_bits]
    }
}

/// `out[map(o)] += src[o]` where source bit `p` lands on output bit
/// `target[p]` or is summed out when `None`. Works in tiles whose low source
/// and low output bits both vary inside the tile, so reads and writes stay
/// within a few cache lines.
fn scatter_bits<R: Real>(src: &[C<R>], target: &[Option<usize>], out_rank: usize) -> Vec<C<R>> {
    const LO: usize = 5;
    let n = target.len();
    let mut out = pool::zeroed(1 << out_rank);
    if n <= 2 * LO {
        let map = BitMap::new(target);
        for (o, &v) in src.iter().enumerate() {
            out[map.map(o)] += v;
        }
        return out;
    }
    let mut inner: Vec<usize> = (0..LO).collect();
    inner.extend((LO..n).filter(|&b| matches!(target[b], Some(t) if t < LO)));
    let outer: Vec<usize> = (0..n).filter(|b| !inner.contains(b)).collect();
    let tile: Vec<(usize, usize)> = (0..1usize << inner.len())
        .map(|v| {
            inner.iter().enumerate().filter(|(k, _)| v >> k & 1 == 1).fold((0, 0), |(s, d), (_, &b)| {
                (s | 1 << b, d | target[b].map_or(0, |t| 1 << t))
            })
        })
        .collect();
    let src_map = BitMap::new(&outer.iter().map(|&b| Some(b)).collect::<Vec<_>>());
    let dst_map = BitMap::new(&outer.iter().map(|&b| target[b]).collect::<Vec<_>>());
    for c in 0..1usize << outer.len() {
        let (sb, db) = (src_map.map(c), dst_map.map(c));
        let s = &src[sb..];
        let d = &mut out[db..];
        for &(so, dof) in &tile {
            d[dof] += s[so];
        }
    }
    out
}

fn bit_of(rank: usize, pos: usize) -> usize {
    rank - 1 - pos
}

impl<R: Real> Tensor<R> {
    pub fn new(indices: Vec<usize>, data: Vec<C<R>>) -> Result<Self, TnError> {
        if data.len() != 1usize << indices.len() {
            return Err(TnError::Shape { rank: indices.len(), len: data.len() });
        }
        let mut s = indices.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != indices.len() {
            return Err(TnError::RepeatedIndex(indices));
        }
        Ok(Self { indices, data })
    }

    pub fn scalar(v: C<R>) -> Self {
        Self { indices: Vec::new(), data: vec![v] }
    }

    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    pub fn position(&self, index: usize) -> Option<usize> {
        self.indices.iter().position(|&i| i == index)
    }

    /// Builds a tensor whose index list may repeat ids; repeated legs are
    /// collapsed to their diagonal.
    pub fn with_repeats(indices: Vec<usize>, data: Vec<C<R>>) -> Result<Self, TnError> {
        if data.len() != 1usize << indices.len() {
            return Err(TnError::Shape { rank: indices.len(), len: data.len() });
        }
        let mut uniq: Vec<usize> = Vec::new();
        for &i in &indices {
            if !uniq.contains(&i) {
                uniq.push(i);
            }
        }
        if uniq.len() == indices.len() {
            return Ok(Self { indices, data });
        }
        let n = indices.len();
        let m = uniq.len();
        let mut out = vec![C::new(R::zero(), R::zero()); 1 << m];
        for (o, v) in out.iter_mut().enumerate() {
            let mut off = 0usize;
            for (p, &i) in indices.iter().enumerate() {
                let u = uniq.iter().position(|&x| x == i).unwrap();
                let bit = o >> bit_of(m, u) & 1;
                off |= bit << bit_of(n, p);
            }
            *v = data[off];
        }
        Ok(Self { indices: uniq, data: out })
    }

    /// Same tensor with its indices reordered to `order`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self, TnError> {
        let n = self.rank();
        if order.len() != n {
            return Err(TnError::Mismatch(format!("permutation {order:?} of {:?}", self.indices)));
        }
        let mut target = vec![None; n];
        for (p, &i) in self.indices.iter().enumerate() {
            let q = order.iter().position(|&x| x == i).ok_or_else(|| TnError::Mismatch(format!("index {i} missing from {order:?}")))?;
            target[bit_of(n, p)] = Some(bit_of(n, q));
        }
        if target.iter().enumerate().all(|(b, t)| *t == Some(b)) {
            return Ok(Self { indices: order.to_vec(), data: self.data.clone() });
        }
        Ok(Self { indices: order.to_vec(), data: scatter_bits(&self.data, &target, n) })
    }

    /// Sums out the given indices.
    pub fn sum_over(&self, sum: &[usize]) -> Self {
        let n = self.rank();
        let keep: Vec<usize> = self.indices.iter().copied().filter(|i| !sum.contains(i)).collect();
        if keep.len() == n {
            return self.clone();
        }
        let m = keep.len();
        let mut target = vec![None; n];
        for (p, &i) in self.indices.iter().enumerate() {
            if let Some(q) = keep.iter().position(|&k| k == i) {
                target[bit_of(n, p)] = Some(bit_of(m, q));
            }
        }
        Self { indices: keep, data: scatter_bits(&self.data, &target, m) }
    }

    /// Restriction to `index = value`; the index disappears.
    pub fn slice(&self, index: usize, value: usize) -> Self {
        let Some(p) = self.position(index) else { return self.clone() };
        let n = self.rank();
        let b = bit_of(n, p);
        let low = (1usize << b) - 1;
        let data = (0..1usize << (n - 1))
            .map(|o| {
                let off = (o & low) | ((o & !low) << 1) | (value << b);
                self.data[off]
            })
            .collect();
        let mut indices = self.indices.clone();
        indices.remove(p);
        Self { indices, data }
    }

    /// Element at the given bit assignment (one bit per index, in order).
    pub fn at(&self, bits: &[usize]) -> C<R> {
        let off = bits.iter().fold(0usize, |acc, &b| acc << 1 | (b & 1));
        self.data[off]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (*a - *b).norm().as_f64()).fold(0.0, f64::max)
    }
}

/// Product of `a` and `b` with the indices in `sum` summed out. The result
/// carries every kept index once; the order depends on the kernel used.
pub fn contract_pair<R: Real>(a: &Tensor<R>, b: &Tensor<R>, sum: &[usize]) -> Tensor<R> {
    let (a, b) = if a.rank() >= b.rank() { (a, b) } else { (b, a) };
    // indices only in b and summed can go first
    let b_private: Vec<usize> = b.indices.iter().copied().filter(|i| sum.contains(i) && a.position(*i).is_none()).collect();
    let b_owned;
    let b = if b_private.is_empty() {
        b
    } else {
        b_owned = b.sum_over(&b_private);
        &b_owned
    };
    let na = a.rank();
    let shared_kept: Vec<usize> = a.indices.iter().copied().filter(|i| b.position(*i).is_some() && !sum.contains(i)).collect();
    let shared_sum: Vec<usize> = a.indices.iter().copied().filter(|i| b.position(*i).is_some() && sum.contains(i)).collect();
    let free_b: Vec<usize> = b.indices.iter().copied().filter(|i| a.position(*i).is_none()).collect();
    let kept_a: Vec<usize> = a.indices.iter().copied().filter(|i| !sum.contains(i)).collect();
    let nfb = free_b.len();
    let mut b_order = shared_kept.clone();
    b_order.extend(&shared_sum);
    b_order.extend(&free_b);
    let bp = b.permuted(&b_order).expect("same index set");
    if nfb >= 3 && !shared_sum.is_empty() && a.data.len() << nfb >= 1 << 16 {
        return contract_gemm(a, b, &shared_kept, &shared_sum, &free_b, &kept_a);
    }
    let nk = kept_a.len();
    let mut r_target = vec![None; na];
    let mut b_target = vec![None; na];
    let nbrow = shared_kept.len() + shared_sum.len();
    for (p, &i) in a.indices.iter().enumerate() {
        if let Some(q) = kept_a.iter().position(|&k| k == i) {
            r_target[bit_of(na, p)] = Some(bit_of(nk, q) + nfb);
        }
        if let Some(q) = b_order[..nbrow].iter().position(|&k| k == i) {
            b_target[bit_of(na, p)] = Some(bit_of(nbrow, q) + nfb);
        }
    }
    let rmap = BitMap::new(&r_target);
    let bmap = BitMap::new(&b_target);
    let zero = C::new(R::zero(), R::zero());
    let mut out = pool::zeroed(1 << (nk + nfb));
    let nf = 1usize << nfb;
    let bd = &bp.data;
    if nf == 1 {
        for (o, &x) in a.data.iter().enumerate() {
            if x != zero {
                out[rmap.map(o)] += x * bd[bmap.map(o)];
            }
        }
    } else {
        for (o, &x) in a.data.iter().enumerate() {
            if x == zero {
                continue;
            }
            let r = rmap.map(o);
            let s = bmap.map(o);
            let dst = &mut out[r..r + nf];
            for (d, &y) in dst.iter_mut().zip(&bd[s..s + nf]) {
                *d += x * y;
            }
        }
    }
    let mut indices = kept_a;
    indices.extend(free_b);
    Tensor { indices, data: out }
}

/// Batched matrix-product path for pairs with many free indices on both
/// sides: `[S, Ma, K] × [S, K, N] → [S, Ma, N]`.
fn contract_gemm<R: Real>(
    a: &Tensor<R>,
    b: &Tensor<R>,
    shared_kept: &[usize],
    shared_sum: &[usize],
    free_b: &[usize],
    kept_a: &[usize],
) -> Tensor<R> {
    let a_only: Vec<usize> = kept_a.iter().copied().filter(|i| !shared_kept.contains(i)).collect();
    let mut a_order = shared_kept.to_vec();
    a_order.extend(&a_only);
    a_order.extend(shared_sum);
    let mut b_order = shared_kept.to_vec();
    b_order.extend(shared_sum);
    b_order.extend(free_b);
    let ap = a.permuted(&a_order).expect("same index set");
    let bp = b.permuted(&b_order).expect("same index set");
    let (bs, m, k, n) = (1usize << shared_kept.len(), 1usize << a_only.len(), 1usize << shared_sum.len(), 1usize << free_b.len());
    let mut out = pool::zeroed(bs * m * n);
    for s in 0..bs {
        let (a_s, b_s, c_s) = (&ap.data[s * m * k..(s + 1) * m * k], &bp.data[s * k * n..(s + 1) * k * n], &mut out[s * m * n..(s + 1) * m * n]);
        if k >= 16 {
            R::gemm(m, k, n, a_s, b_s, c_s);
        } else {
            // short inner dimension: stream rows of the output directly
            for (row, a_row) in c_s.chunks_exact_mut(n).zip(a_s.chunks_exact(k)) {
                for (&x, b_row) in a_row.iter().zip(b_s.chunks_exact(n)) {
                    for (d, &y) in row.iter_mut().zip(b_row) {
                        *d += x * y;
                    }
                }
            }
        }
    }
    pool::recycle(ap.data);
    let mut indices = shared_kept.to_vec();
    indices.extend(&a_only);
    indices.extend(free_b);
    Tensor { indices, data: out }
}
