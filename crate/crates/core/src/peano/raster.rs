//! Square rasters and their Hausdorff distance, used as an independent
//! check of analytic footprints.

/// An `n × n` boolean raster over `[x0, x0 + n·pitch] × [y0, y0 + n·pitch]`,
/// row-major with row `j` at height `y0 + (j + ½) pitch`.
#[derive(Clone, Debug)]
pub struct Raster {
    pub n: usize,
    pub x0: f64,
    pub y0: f64,
    pub pitch: f64,
    pub cells: Vec<bool>,
}

impl Raster {
    pub fn new(n: usize, x0: f64, y0: f64, pitch: f64) -> Self {
        Raster { n, x0, y0, pitch, cells: vec![false; n * n] }
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let i = ((x - self.x0) / self.pitch).floor();
        let j = ((y - self.y0) / self.pitch).floor();
        let n = self.n as f64;
        (i >= 0.0 && j >= 0.0 && i < n && j < n).then_some((i as usize, j as usize))
    }

    pub fn mark(&mut self, x: f64, y: f64) {
        if let Some((i, j)) = self.cell_of(x, y) {
            self.cells[j * self.n + i] = true;
        }
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.cells[j * self.n + i] = true;
    }

    pub fn column_center(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.pitch
    }

    /// Marks the cells of column `i` whose row meets `[lo, hi]`.
    pub fn mark_span(&mut self, i: usize, lo: f64, hi: f64) {
        let first = ((lo - self.y0) / self.pitch).floor().max(0.0);
        let last = ((hi - self.y0) / self.pitch).floor().min(self.n as f64 - 1.0);
        if first > last {
            return;
        }
        for j in first as usize..=last as usize {
            self.set(i, j);
        }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Squared distance transform of a sampled function along one line.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q].is_infinite() {
            continue;
        }
        if f[v[0]].is_infinite() {
            v[0] = q;
            continue;
        }
        let s = loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64);
            if s > z[k] {
                break s;
            }
            k -= 1;
        };
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    if f[v[0]].is_infinite() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance, in cells, from every cell to the nearest set
/// cell. Infinite everywhere when nothing is set.
pub fn squared_edt(r: &Raster) -> Vec<f64> {
    let n = r.n;
    let mut d: Vec<f64> = r.cells.iter().map(|&c| if c { 0.0 } else { f64::INFINITY }).collect();
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for i in 0..n {
        for j in 0..n {
            f[j] = d[j * n + i];
        }
        edt_1d(&f, &mut out, &mut v, &mut z);
        for j in 0..n {
            d[j * n + i] = out[j];
        }
    }
    for j in 0..n {
        f.copy_from_slice(&d[j * n..(j + 1) * n]);
        edt_1d(&f, &mut out, &mut v, &mut z);
        d[j * n..(j + 1) * n].copy_from_slice(&out);
    }
    d
}

/// Two-sided Hausdorff distance between the set cells of two rasters on the
/// same grid, in length units.
pub fn hausdorff(a: &Raster, b: &Raster) -> f64 {
    assert_eq!(a.n, b.n, "rasters must share a grid");
    let (da, db) = (squared_edt(a), squared_edt(b));
    let one_way = |from: &Raster, to: &[f64]| {
        from.cells
            .iter()
            .zip(to)
            .filter(|(&c, _)| c)
            .map(|(_, &d)| d)
            .fold(0.0, f64::max)
    };
    one_way(a, &db).max(one_way(b, &da)).sqrt() * a.pitch
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(r: &Raster) -> Vec<f64> {
        let n = r.n;
        let set: Vec<(usize, usize)> =
            (0..n * n).filter(|&c| r.cells[c]).map(|c| (c % n, c / n)).collect();
        (0..n * n)
            .map(|c| {
                let (i, j) = (c % n, c / n);
                set.iter()
                    .map(|&(a, b)| {
                        let (dx, dy) = (i as f64 - a as f64, j as f64 - b as f64);
                        dx * dx + dy * dy
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn transform_matches_brute_force() {
        let mut r = Raster::new(23, 0.0, 0.0, 1.0);
        for &(i, j) in &[(0, 0), (5, 17), (22, 3), (11, 11), (12, 11)] {
            r.set(i, j);
        }
        assert_eq!(squared_edt(&r), brute(&r));
        let empty = Raster::new(4, 0.0, 0.0, 1.0);
        assert!(squared_edt(&empty).iter().all(|d| d.is_infinite()));
    }

    #[test]
    fn hausdorff_of_offset_points() {
        let mut a = Raster::new(16, 0.0, 0.0, 0.5);
        let mut b = a.clone();
        a.set(2, 2);
        b.set(2, 2);
        b.set(5, 6);
        assert!((hausdorff(&a, &b) - 2.5).abs() < 1e-12);
        assert_eq!(hausdorff(&a, &a), 0.0);
    }
}
