use super::{NetError, TripRecord};

/// `Lambda[i][j][t]`: riders requesting a trip from `i` to `j` at step `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandTensor {
    n: usize,
    horizon: u32,
    data: Vec<f64>,
}

impl DemandTensor {
    pub fn zeros(n: usize, horizon: u32) -> Self {
        Self {
            n,
            horizon,
            data: vec![0.0; n * n * horizon as usize],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    fn index(&self, i: usize, j: usize, t: u32) -> Result<usize, NetError> {
        if i >= self.n || j >= self.n || t >= self.horizon {
            return Err(NetError::OutOfRange(i, j, t));
        }
        Ok((t as usize * self.n + i) * self.n + j)
    }

    pub fn get(&self, i: usize, j: usize, t: u32) -> f64 {
        self.index(i, j, t).map(|k| self.data[k]).unwrap_or(0.0)
    }

    pub fn set(&mut self, i: usize, j: usize, t: u32, v: f64) -> Result<(), NetError> {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(NetError::BadDemand(v));
        }
        if i == j && v != 0.0 {
            return Err(NetError::SelfDemand(i, t));
        }
        let k = self.index(i, j, t)?;
        self.data[k] = v;
        Ok(())
    }

    pub fn add(&mut self, i: usize, j: usize, t: u32, v: f64) -> Result<(), NetError> {
        let cur = self.get(i, j, t);
        self.set(i, j, t, cur + v)
    }

    /// Nonzero entries as `(i, j, t, value)` in index order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u32, f64)> + '_ {
        let n = self.n;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(k, v)| {
                let j = k % n;
                let i = (k / n) % n;
                let t = (k / (n * n)) as u32;
                (i, j, t, *v)
            })
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Counts trips by pickup, dropoff and request step. Trips requested at
    /// or after the horizon are dropped.
    pub fn from_trips(trips: &[TripRecord], n: usize, horizon: u32) -> Result<Self, NetError> {
        let mut d = Self::zeros(n, horizon);
        for t in trips {
            if t.request_time < horizon {
                d.add(t.pickup_loc, t.dropoff_loc, t.request_time, 1.0)?;
            }
        }
        Ok(d)
    }

    /// Sums over time, divided by `period` to give a rate per step.
    pub fn to_rates(&self, period: f64) -> RateMatrix {
        let mut r = RateMatrix::zeros(self.n);
        for (i, j, _, v) in self.entries() {
            r.data[i * self.n + j] += v / period;
        }
        r
    }
}

/// Steady-state request rates `lambda_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RateMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n {
            self.data[i * self.n + j]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<(), NetError> {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(NetError::BadDemand(v));
        }
        if i >= self.n || j >= self.n {
            return Err(NetError::OutOfRange(i, j, 0));
        }
        if i == j && v != 0.0 {
            return Err(NetError::SelfDemand(i, 0));
        }
        self.data[i * self.n + j] = v;
        Ok(())
    }

    /// Origin-destination pairs with positive rate, row-major.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.data[i * self.n + j];
                if v > 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}
