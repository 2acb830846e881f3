use serde::{Deserialize, Serialize};

use crate::data::Day;

/// Point predictions for the days after `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub model: String,
    /// Last observed day; the first prediction is for the day after.
    pub origin: Day,
    /// Predictions in original units.
    pub original: Vec<f64>,
    /// Predictions on the modelling scale, before the transform chain is
    /// inverted.
    pub transformed: Vec<f64>,
}

impl Forecast {
    pub fn horizon(&self) -> usize {
        self.original.len()
    }

    pub fn dates(&self) -> impl Iterator<Item = Day> + '_ {
        (1..=self.horizon() as i64).map(|h| self.origin.offset(h))
    }

    /// `date,prediction_original,prediction_transformed` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,prediction_original,prediction_transformed\n");
        for ((day, o), t) in self.dates().zip(&self.original).zip(&self.transformed) {
            out.push_str(&format!("{day},{o},{t}\n"));
        }
        out
    }
}

/// Number of days from the day after `origin` through `end`, inclusive.
pub fn horizon_until(origin: Day, end: Day) -> usize {
    (end.0 - origin.0).max(0) as usize
}
