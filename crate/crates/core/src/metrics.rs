//! Binary confusion counts and the precision / recall / F1 / accuracy
//! reported per emotion. Precision, recall and F1 are for the positive
//! ("emotion present") class; a zero denominator yields 0.

use std::fmt::Write as _;
use std::ops::Add;

use crate::corpus::EmotionLabel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Confusion {
    pub fn record(&mut self, predicted: bool, gold: bool) {
        match (predicted, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

impl Add for Confusion {
    type Output = Confusion;

    fn add(self, other: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<(EmotionLabel, Confusion)>,
}

pub const REPORT_HEADER: &str = "emotion,tp,fp,fn,tn,precision,recall,f1,accuracy";

impl EvalReport {
    pub fn push(&mut self, emotion: EmotionLabel, confusion: Confusion) {
        self.rows.push((emotion, confusion));
    }

    pub fn get(&self, emotion: &EmotionLabel) -> Option<&Confusion> {
        self.rows.iter().find(|(e, _)| e == emotion).map(|(_, c)| c)
    }

    /// `emotion,tp,fp,fn,tn,precision,recall,f1,accuracy`, metrics with six
    /// decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for (emotion, c) in &self.rows {
            let _ = writeln!(
                out,
                "{emotion},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                c.tp,
                c.fp,
                c.fn_,
                c.tn,
                c.precision(),
                c.recall(),
                c.f1(),
                c.accuracy()
            );
        }
        out
    }

    /// Plain-text table with Emotion, Prec, Rec and F1 columns.
    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|(e, _)| e.as_str().len())
            .max()
            .unwrap_or(0)
            .max("Emotion".len());
        let mut out = format!(
            "{:<width$}  {:>5}  {:>5}  {:>5}\n",
            "Emotion", "Prec", "Rec", "F1"
        );
        for (emotion, c) in &self.rows {
            let mut name = emotion.to_string();
            if let Some(first) = name.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
            let _ = writeln!(
                out,
                "{name:<width$}  {:>5.2}  {:>5.2}  {:>5.2}",
                c.precision(),
                c.recall(),
                c.f1()
            );
        }
        out
    }
}
