use super::model::Parameters;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update of `params` from `grads` (same shapes).
    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) {
        let grads = grads.tensors();
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for (((pv, &gv), mv), vv) in p.data.iter_mut().zip(&g.data).zip(m).zip(v) {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let m_hat = *mv / c1;
                let v_hat = *vv / c2;
                *pv -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

impl Default for Adam {
    fn default() -> Self {
        Self::new(1e-3, 0.9, 0.999, 1e-8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::model::TeacherModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = TeacherModel::new(5, 4, 3, &mut rng);
        let before = p.clone();
        let mut g = p.zeros_like();
        g.gender_b.data = vec![2.0, -0.5];
        let mut opt = Adam::new(0.1, 0.9, 0.999, 1e-8);
        opt.step(&mut p, &g);
        assert!((p.gender_b.data[0] - (before.gender_b.data[0] - 0.1)).abs() < 1e-6);
        assert!((p.gender_b.data[1] - (before.gender_b.data[1] + 0.1)).abs() < 1e-6);
        assert_eq!(p.gender_w, before.gender_w);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = TeacherModel::new(5, 4, 3, &mut rng);
        let before = p.clone();
        let mut g = p.zeros_like();
        g.tensors_mut().into_iter().for_each(|t| t.fill(0.3));
        let mut opt = Adam::new(0.0, 0.9, 0.999, 1e-8);
        for _ in 0..5 {
            opt.step(&mut p, &g);
        }
        assert_eq!(p, before);
    }
}
