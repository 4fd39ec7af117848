/// Per-feature running mean/variance (Welford). Updated during training,
/// left untouched at evaluation so a frozen policy normalizes consistently.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningNorm {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn update(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.mean.len());
        self.count += 1;
        let n = self.count as f64;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.mean.len());
        if self.count < 2 {
            return x.to_vec();
        }
        let n = self.count as f64;
        x.iter()
            .enumerate()
            .map(|(i, &v)| (v - self.mean[i]) / (self.m2[i] / n + 1e-8).sqrt())
            .collect()
    }

    /// Flat state for checkpointing: [count, mean..., m2...].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = vec![self.count as f64];
        out.extend_from_slice(&self.mean);
        out.extend_from_slice(&self.m2);
        out
    }

    pub fn from_flat(dim: usize, flat: &[f64]) -> Option<Self> {
        if flat.len() != 1 + 2 * dim {
            return None;
        }
        Some(Self {
            count: flat[0] as u64,
            mean: flat[1..1 + dim].to_vec(),
            m2: flat[1 + dim..].to_vec(),
        })
    }
}
