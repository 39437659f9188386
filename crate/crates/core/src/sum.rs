//! Compensated (Neumaier) summation.

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn neumaier<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = Neumaier::default();
    for x in terms {
        acc.add(x);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_mass() {
        let s = neumaier([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }
}
