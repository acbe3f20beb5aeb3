//! MSE, %E, the 14×14 confusion matrix and denomination-level recognition
//! rates, plus their text and TSV renderings.

use std::fmt::Write as _;

use crate::classifier::{
    argmax, denomination_of, squared_error, ClassLabel, Denomination, Example, MlpModel, NUM_CLASSES,
};
use crate::{Error, Result};

/// Mean over samples and outputs of the squared error, and the percentage of
/// samples whose argmax output differs from the target class.
pub fn mse_and_percent_error(model: &MlpModel, samples: &[Example]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sq = 0.0;
    let mut wrong = 0usize;
    for ex in samples {
        let out = model.forward(&ex.features)?;
        sq += squared_error(&out, &ex.label.one_hot());
        if argmax(&out).0 != ex.label.index() {
            wrong += 1;
        }
    }
    let n = samples.len() as f64;
    Ok((sq / (n * NUM_CLASSES as f64), percent(wrong, samples.len())))
}

fn percent(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

/// One row of the samples / MSE / %E table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitMetrics {
    pub samples: usize,
    pub mse: f64,
    pub percent_error: f64,
}

impl SplitMetrics {
    pub fn measure(model: &MlpModel, samples: &[Example]) -> Result<Self> {
        let (mse, percent_error) = mse_and_percent_error(model, samples)?;
        Ok(Self {
            samples: samples.len(),
            mse,
            percent_error,
        })
    }
}

/// Rows are target classes, columns output classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        Self {
            counts: [[0; NUM_CLASSES]; NUM_CLASSES],
        }
    }
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, target: ClassLabel, output: ClassLabel) {
        self.counts[target.index()][output.index()] += 1;
    }

    pub fn add_count(&mut self, target: ClassLabel, output: ClassLabel, n: u64) {
        self.counts[target.index()][output.index()] += n;
    }

    pub fn get(&self, target: ClassLabel, output: ClassLabel) -> u64 {
        self.counts[target.index()][output.index()]
    }

    pub fn counts(&self) -> &[[u64; NUM_CLASSES]; NUM_CLASSES] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, target: ClassLabel) -> u64 {
        self.counts[target.index()].iter().sum()
    }

    /// Class-level accuracy in percent.
    pub fn class_accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(percent(self.trace() as usize, total as usize))
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("target\\output");
        for o in 0..NUM_CLASSES {
            let _ = write!(s, "{o:>6}");
        }
        s.push('\n');
        for (t, row) in self.counts.iter().enumerate() {
            let _ = write!(s, "{t:>13}");
            for c in row {
                let _ = write!(s, "{c:>6}");
            }
            s.push('\n');
        }
        s
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("target");
        for o in 0..NUM_CLASSES {
            let _ = write!(s, "\t{o}");
        }
        s.push('\n');
        for (t, row) in self.counts.iter().enumerate() {
            let _ = write!(s, "{t}");
            for c in row {
                let _ = write!(s, "\t{c}");
            }
            s.push('\n');
        }
        s
    }
}

pub fn confusion_matrix(model: &MlpModel, samples: &[Example]) -> Result<ConfusionMatrix> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cm = ConfusionMatrix::new();
    for ex in samples {
        let (out, _) = model.classify(&ex.features)?;
        cm.record(ex.label, out);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenominationCount {
    pub denomination: Denomination,
    pub recognized: u64,
    pub total: u64,
}

/// Denomination-level tallies: a sample is recognized when its output class
/// has the same denomination as its target class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognitionRates {
    pub per_denomination: [DenominationCount; 4],
}

impl RecognitionRates {
    pub fn count(&self, d: Denomination) -> DenominationCount {
        self.per_denomination[d.ordinal()]
    }

    pub fn rate(&self, d: Denomination) -> Result<f64> {
        let c = self.count(d);
        if c.total == 0 {
            return Err(Error::EmptyDenomination(d.to_string()));
        }
        Ok(percent(c.recognized as usize, c.total as usize))
    }

    pub fn recognized(&self) -> u64 {
        self.per_denomination.iter().map(|c| c.recognized).sum()
    }

    pub fn total(&self) -> u64 {
        self.per_denomination.iter().map(|c| c.total).sum()
    }

    pub fn overall_rate(&self) -> Result<f64> {
        if self.total() == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(percent(self.recognized() as usize, self.total() as usize))
    }
}

pub fn recognition_rates(cm: &ConfusionMatrix) -> RecognitionRates {
    let mut per = Denomination::ALL.map(|denomination| DenominationCount {
        denomination,
        recognized: 0,
        total: 0,
    });
    for t in ClassLabel::all() {
        let dt = denomination_of(t);
        for o in ClassLabel::all() {
            let n = cm.get(t, o);
            let slot = &mut per[dt.ordinal()];
            slot.total += n;
            if denomination_of(o) == dt {
                slot.recognized += n;
            }
        }
    }
    RecognitionRates { per_denomination: per }
}

/// Full evaluation of one sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    pub percent_error: f64,
    pub confusion: ConfusionMatrix,
    pub rates: RecognitionRates,
}

pub fn evaluate(model: &MlpModel, samples: &[Example]) -> Result<Metrics> {
    let (mse, percent_error) = mse_and_percent_error(model, samples)?;
    let confusion = confusion_matrix(model, samples)?;
    let rates = recognition_rates(&confusion);
    Ok(Metrics {
        mse,
        percent_error,
        confusion,
        rates,
    })
}

/// Formats like `%g` with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn rate_cell(rates: &RecognitionRates, d: Denomination) -> String {
    rates.rate(d).map(sig6).unwrap_or_else(|_| "-".into())
}

/// Samples / MSE / %E rows.
pub fn split_table(rows: &[(&str, SplitMetrics)]) -> String {
    let mut s = format!("{:<12}{:>9}{:>14}{:>12}\n", "", "Samples", "MSE", "%E");
    for (name, m) in rows {
        let _ = writeln!(
            s,
            "{:<12}{:>9}{:>14}{:>12}",
            format!("{name}:"),
            m.samples,
            sig6(m.mse),
            sig6(m.percent_error)
        );
    }
    s
}

impl Metrics {
    /// Recognition table, MSE/%E line and confusion matrix.
    pub fn to_text(&self, scope: &str) -> String {
        let mut s = format!("Recognition results ({scope})\n");
        let _ = writeln!(s, "{:<6}{:<10}{:>22}{:>12}", "No.", "Coin", "Correct/Total", "Rate (%)");
        for (i, c) in self.rates.per_denomination.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:<6}{:<10}{:>22}{:>12}",
                i + 1,
                c.denomination.to_string(),
                format!("{}/{}", c.recognized, c.total),
                rate_cell(&self.rates, c.denomination)
            );
        }
        let overall = self.rates.overall_rate().map(sig6).unwrap_or_else(|_| "-".into());
        let _ = writeln!(
            s,
            "{:<16}{:>22}{:>12}",
            "Total",
            format!("{}/{}", self.rates.recognized(), self.rates.total()),
            overall
        );
        let _ = writeln!(s, "\nMSE {}  %E {}", sig6(self.mse), sig6(self.percent_error));
        s.push_str("\nConfusion matrix\n");
        s.push_str(&self.confusion.to_text());
        s
    }

    pub fn to_tsv(&self, scope: &str) -> String {
        let mut s = format!("scope\t{scope}\n");
        s.push_str("denomination\trecognized\ttotal\trate\n");
        for c in &self.rates.per_denomination {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}",
                c.denomination.value(),
                c.recognized,
                c.total,
                rate_cell(&self.rates, c.denomination)
            );
        }
        let overall = self.rates.overall_rate().map(sig6).unwrap_or_else(|_| "-".into());
        let _ = writeln!(s, "total\t{}\t{}\t{}", self.rates.recognized(), self.rates.total(), overall);
        let _ = writeln!(s, "mse\t{}", sig6(self.mse));
        let _ = writeln!(s, "percent_error\t{}", sig6(self.percent_error));
        s.push_str(&self.confusion.to_tsv());
        s
    }
}
