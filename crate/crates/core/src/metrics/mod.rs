//! Confusion matrix and accuracy measures.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

/// `K × K` counts with rows = ground truth and columns = predicted class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
    classes: Vec<String>,
}

/// Producer's and user's accuracy of one class; `None` where the row or
/// column is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMetrics {
    pub name: String,
    pub producers: Option<f64>,
    pub users: Option<f64>,
}

/// Whole-number percentage, rounding half to even.
pub fn percent(ratio: f64) -> i64 {
    (ratio * 100.0).round_ties_even() as i64
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let k = classes.len();
        ConfusionMatrix { counts: vec![0; k * k], classes }
    }

    /// Matrix from row-major counts.
    pub fn from_counts(classes: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        let k = classes.len();
        if counts.len() != k * k {
            return Err(Error::shape(format!("{} counts for {k} classes", counts.len())));
        }
        Ok(ConfusionMatrix { counts, classes })
    }

    pub fn size(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.size() + predicted]
    }

    pub fn accumulate(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let k = self.size();
        if truth >= k || predicted >= k {
            return Err(Error::data(format!("label pair ({truth}, {predicted}) out of range for {k} classes")));
        }
        self.counts[truth * k + predicted] += 1;
        Ok(())
    }

    pub fn accumulate_all(&mut self, truth: &[usize], predicted: &[usize]) -> Result<()> {
        if truth.len() != predicted.len() {
            return Err(Error::data(format!("{} truths for {} predictions", truth.len(), predicted.len())));
        }
        truth.iter().zip(predicted).try_for_each(|(&t, &p)| self.accumulate(t, p))
    }

    /// Element-wise sum with a matrix over the same classes.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::data("cannot merge matrices over different classes"));
        }
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.size()).map(|k| self.get(k, k)).sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.chunks(self.size().max(1)).map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        let k = self.size();
        (0..k).map(|c| (0..k).map(|r| self.get(r, c)).sum()).collect()
    }

    fn require_samples(&self) -> Result<u64> {
        match self.total() {
            0 => Err(Error::UndefinedMetric("confusion matrix is empty".into())),
            n => Ok(n),
        }
    }

    pub fn overall_accuracy(&self) -> Result<f64> {
        let n = self.require_samples()?;
        Ok(self.trace() as f64 / n as f64)
    }

    pub fn class_metrics(&self) -> Vec<ClassMetrics> {
        let (rows, cols) = (self.row_totals(), self.col_totals());
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        self.classes
            .iter()
            .enumerate()
            .map(|(k, name)| ClassMetrics {
                name: name.clone(),
                producers: ratio(self.get(k, k), rows[k]),
                users: ratio(self.get(k, k), cols[k]),
            })
            .collect()
    }

    /// Cohen's kappa with marginal-product chance agreement, evaluated as
    /// `(N·trace − Σ rₖcₖ) / (N² − Σ rₖcₖ)` in exact integer arithmetic.
    pub fn cohen_kappa(&self) -> Result<f64> {
        let n = self.require_samples()? as u128;
        let chance: u128 = self.row_totals().iter().zip(self.col_totals()).map(|(&r, c)| r as u128 * c as u128).sum();
        let denom = n * n - chance;
        if denom == 0 {
            return Err(Error::UndefinedMetric("chance agreement is 1".into()));
        }
        let num = (n * self.trace() as u128) as i128 - chance as i128;
        Ok(num as f64 / denom as f64)
    }

    /// Table with one row per ground-truth class, row totals and PA, then
    /// column totals, UA, OA and kappa.
    pub fn render_text(&self) -> String {
        let k = self.size();
        let width = self.counts.iter().chain(&[self.total()]).map(|c| c.to_string().len()).max().unwrap_or(1).max(5);
        let label = self.classes.iter().map(|c| c.len()).max().unwrap_or(0).max(5);
        let metrics = self.class_metrics();
        let pct = |v: Option<f64>| v.map(|r| format!("{}%", percent(r))).unwrap_or_else(|| "n/a".into());
        let mut s = String::new();
        let _ = write!(s, "{:label$}", "truth");
        for c in 0..k {
            let _ = write!(s, " {:>width$}", format!("#{}", c + 1));
        }
        let _ = writeln!(s, " {:>width$} {:>5}", "total", "PA");
        let rows = self.row_totals();
        for r in 0..k {
            let _ = write!(s, "{:label$}", self.classes[r]);
            for c in 0..k {
                let _ = write!(s, " {:>width$}", self.get(r, c));
            }
            let _ = writeln!(s, " {:>width$} {:>5}", rows[r], pct(metrics[r].producers));
        }
        let _ = write!(s, "{:label$}", "total");
        for t in self.col_totals() {
            let _ = write!(s, " {t:>width$}");
        }
        let _ = writeln!(s, " {:>width$}", self.total());
        let _ = write!(s, "{:label$}", "UA");
        for m in &metrics {
            let _ = write!(s, " {:>width$}", pct(m.users));
        }
        let _ = writeln!(s);
        match (self.overall_accuracy(), self.cohen_kappa()) {
            (Ok(oa), Ok(kappa)) => {
                let _ = writeln!(s, "OA = {oa:.6} ({}%)  kappa = {kappa:.6}", percent(oa));
            }
            (Ok(oa), Err(_)) => {
                let _ = writeln!(s, "OA = {oa:.6} ({}%)  kappa = undefined", percent(oa));
            }
            _ => {
                let _ = writeln!(s, "OA = undefined  kappa = undefined");
            }
        }
        s
    }

    /// CSV mirror of [`render_text`](Self::render_text) with raw ratios.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let k = self.size();
        writeln!(w, "truth,{},total", self.classes.join(","))?;
        let rows = self.row_totals();
        for r in 0..k {
            let cells: Vec<String> = (0..k).map(|c| self.get(r, c).to_string()).collect();
            writeln!(w, "{},{},{}", self.classes[r], cells.join(","), rows[r])?;
        }
        let cols: Vec<String> = self.col_totals().iter().map(u64::to_string).collect();
        writeln!(w, "total,{},{}", cols.join(","), self.total())?;
        let fmt = |v: Option<f64>| v.map(|r| r.to_string()).unwrap_or_else(|| "undefined".into());
        let metrics = self.class_metrics();
        let pa: Vec<String> = metrics.iter().map(|m| fmt(m.producers)).collect();
        let ua: Vec<String> = metrics.iter().map(|m| fmt(m.users)).collect();
        writeln!(w, "PA,{}", pa.join(","))?;
        writeln!(w, "UA,{}", ua.join(","))?;
        writeln!(w, "OA,{}", fmt(self.overall_accuracy().ok()))?;
        writeln!(w, "kappa,{}", fmt(self.cohen_kappa().ok()))?;
        Ok(())
    }

    /// Reads the header and the `K` count rows of a CSV in the
    /// [`write_csv`](Self::write_csv) layout. Trailing total and footer rows
    /// are ignored, so a bare `K × K` table with a header row also loads.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines().filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let header = lines.next().ok_or_else(|| Error::Format("empty confusion-matrix CSV".into()))??;
        let classes: Vec<String> = header
            .split(',')
            .skip(1)
            .map(|c| c.trim().to_string())
            .take_while(|c| c != "total")
            .collect();
        let k = classes.len();
        if k == 0 {
            return Err(Error::Format("confusion-matrix CSV header lists no classes".into()));
        }
        let mut counts = Vec::with_capacity(k * k);
        for r in 0..k {
            let line = lines.next().ok_or_else(|| Error::Format(format!("missing row {} of {k}", r + 1)))??;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < k + 1 {
                return Err(Error::Format(format!("row {} has {} fields", r + 1, fields.len())));
            }
            for f in &fields[1..=k] {
                counts.push(f.parse::<u64>().map_err(|_| Error::Format(format!("bad count {f:?} in row {}", r + 1)))?);
            }
        }
        ConfusionMatrix::from_counts(classes, counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|c| format!("c{c}")).collect()
    }

    #[test]
    fn single_accumulation() {
        let mut cm = ConfusionMatrix::new(names(3));
        cm.accumulate(2, 2).unwrap();
        assert_eq!((cm.total(), cm.trace()), (1, 1));
        assert!(matches!(cm.accumulate(3, 0), Err(Error::Data(_))));
    }

    #[test]
    fn extremes() {
        let diag = ConfusionMatrix::from_counts(names(2), vec![5, 0, 0, 7]).unwrap();
        assert_eq!(diag.overall_accuracy().unwrap(), 1.0);
        assert_eq!(diag.cohen_kappa().unwrap(), 1.0);
        let off = ConfusionMatrix::from_counts(names(2), vec![0, 4, 3, 0]).unwrap();
        assert_eq!(off.overall_accuracy().unwrap(), 0.0);
        let chance = ConfusionMatrix::from_counts(names(2), vec![1, 1, 1, 1]).unwrap();
        assert_eq!(chance.cohen_kappa().unwrap(), 0.0);
        let single = ConfusionMatrix::from_counts(names(1), vec![9]).unwrap();
        assert!(matches!(single.cohen_kappa(), Err(Error::UndefinedMetric(_))));
        let m = single.class_metrics();
        assert_eq!((m[0].producers, m[0].users), (Some(1.0), Some(1.0)));
        assert!(matches!(ConfusionMatrix::new(names(2)).overall_accuracy(), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn undefined_class_metrics() {
        let cm = ConfusionMatrix::from_counts(names(2), vec![3, 0, 0, 0]).unwrap();
        let m = cm.class_metrics();
        assert_eq!(m[1].producers, None);
        assert_eq!(m[1].users, None);
    }

    #[test]
    fn half_even_percentages() {
        assert_eq!(percent(0.985), 98);
        assert_eq!(percent(0.995), 100);
        assert_eq!(percent(0.125), 12);
        assert_eq!(percent(0.135), 14);
    }

    #[test]
    fn toy_render_and_round_trip() {
        let cm = ConfusionMatrix::from_counts(names(2), vec![3, 1, 0, 4]).unwrap();
        let text = cm.render_text();
        assert_eq!(text.lines().count(), 6);
        let mut csv = Vec::new();
        cm.write_csv(&mut csv).unwrap();
        assert_eq!(ConfusionMatrix::read_csv(&csv[..]).unwrap(), cm);
    }

    fn stream() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..6).prop_flat_map(|k| (Just(k), prop::collection::vec((0..k, 0..k), 1..200)))
    }

    proptest! {
        #[test]
        fn order_independent((k, pairs) in stream(), seed in any::<u64>()) {
            let mut a = ConfusionMatrix::new(names(k));
            pairs.iter().for_each(|&(t, p)| a.accumulate(t, p).unwrap());
            let mut shuffled = pairs.clone();
            crate::tensor::RngState::new(seed).shuffle(&mut shuffled);
            let mut b = ConfusionMatrix::new(names(k));
            shuffled.iter().for_each(|&(t, p)| b.accumulate(t, p).unwrap());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn merge_equals_concatenation((k, pairs) in stream(), cut in 0usize..200) {
            let cut = cut.min(pairs.len());
            let (mut a, mut b, mut all) = (ConfusionMatrix::new(names(k)), ConfusionMatrix::new(names(k)), ConfusionMatrix::new(names(k)));
            pairs[..cut].iter().for_each(|&(t, p)| a.accumulate(t, p).unwrap());
            pairs[cut..].iter().for_each(|&(t, p)| b.accumulate(t, p).unwrap());
            pairs.iter().for_each(|&(t, p)| all.accumulate(t, p).unwrap());
            a.merge(&b).unwrap();
            prop_assert_eq!(a, all);
        }

        #[test]
        fn oa_is_weighted_mean_of_pa((k, pairs) in stream()) {
            let mut cm = ConfusionMatrix::new(names(k));
            pairs.iter().for_each(|&(t, p)| cm.accumulate(t, p).unwrap());
            let rows = cm.row_totals();
            let weighted: f64 = cm.class_metrics().iter().zip(&rows)
                .filter_map(|(m, &r)| m.producers.map(|pa| pa * r as f64)).sum::<f64>() / cm.total() as f64;
            prop_assert!((weighted - cm.overall_accuracy().unwrap()).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariance((k, pairs) in stream(), seed in any::<u64>()) {
            let mut perm: Vec<usize> = (0..k).collect();
            crate::tensor::RngState::new(seed).shuffle(&mut perm);
            let mut a = ConfusionMatrix::new(names(k));
            let mut b = ConfusionMatrix::new((0..k).map(|c| format!("c{}", perm.iter().position(|&p| p == c).unwrap())).collect());
            for &(t, p) in &pairs {
                a.accumulate(t, p).unwrap();
                b.accumulate(perm[t], perm[p]).unwrap();
            }
            prop_assert_eq!(a.overall_accuracy().unwrap(), b.overall_accuracy().unwrap());
            match (a.cohen_kappa(), b.cohen_kappa()) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "kappa definedness differs"),
            }
            let (ma, mb) = (a.class_metrics(), b.class_metrics());
            for c in 0..k {
                prop_assert_eq!(&ma[c].producers, &mb[perm[c]].producers);
                prop_assert_eq!(&ma[c].users, &mb[perm[c]].users);
            }
        }

        #[test]
        fn kappa_one_iff_diagonal((k, pairs) in stream()) {
            let mut cm = ConfusionMatrix::new(names(k));
            pairs.iter().for_each(|&(t, p)| cm.accumulate(t, p).unwrap());
            let diagonal = cm.trace() == cm.total();
            match cm.cohen_kappa() {
                Ok(kappa) => prop_assert_eq!(kappa == 1.0, diagonal),
                Err(_) => {}
            }
        }
    }
}
