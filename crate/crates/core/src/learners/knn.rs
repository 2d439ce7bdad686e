use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Stored training set for Euclidean k-nearest-neighbour voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub row_ids: Vec<usize>,
}

pub const DEFAULT_K: usize = 5;

pub fn knn_fit(data: &Dataset, k: usize) -> Result<KnnModel> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > data.n() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds {} rows",
            data.n()
        )));
    }
    Ok(KnnModel {
        k,
        rows: data.rows().map(<[f64]>::to_vec).collect(),
        labels: data.labels().to_vec(),
        row_ids: data.row_ids().to_vec(),
    })
}

impl KnnModel {
    pub(crate) fn fraction_unchecked(&self, row: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize, u8)> = self
            .rows
            .iter()
            .zip(&self.labels)
            .zip(&self.row_ids)
            .map(|((r, &l), &id)| {
                let d: f64 = r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, id, l)
            })
            .collect();
        let k = self.k;
        let cmp =
            |a: &(f64, usize, u8), b: &(f64, usize, u8)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let minority = dist[..k].iter().filter(|e| e.2 == 1).count();
        minority as f64 / k as f64
    }

    /// `(label, minority fraction among the k nearest)`. Distance ties go to the lower row id.
    pub fn predict(&self, row: &[f64]) -> Result<(u8, f64)> {
        let d = self.rows.first().map_or(0, Vec::len);
        if row.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: row.len(),
            });
        }
        let f = self.fraction_unchecked(row);
        Ok((u8::from(f > 0.5), f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five() -> Dataset {
        Dataset::from_rows(
            &[
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 2.0],
                vec![3.0, 3.0],
                vec![1.0, 1.0],
            ],
            vec![0, 1, 1, 0, 1],
        )
        .unwrap()
    }

    #[test]
    fn k_equal_n_gives_global_majority() {
        let d = five();
        let m = knn_fit(&d, 5).unwrap();
        for q in [[10.0, 10.0], [-3.0, 0.0], [0.5, 0.5]] {
            assert_eq!(m.predict(&q).unwrap(), (1, 0.6));
        }
    }

    #[test]
    fn one_nn_returns_the_row_label() {
        let d = five();
        let m = knn_fit(&d, 1).unwrap();
        for (row, &l) in d.rows().zip(d.labels()) {
            assert_eq!(m.predict(row).unwrap().0, l);
        }
    }

    #[test]
    fn three_nn_matches_exhaustive_sort() {
        let d = five();
        let m = knn_fit(&d, 3).unwrap();
        let query = [2.0, 2.0];
        let mut all: Vec<(f64, usize)> = d
            .rows()
            .enumerate()
            .map(|(i, r)| ((r[0] - query[0]).powi(2) + (r[1] - query[1]).powi(2), i))
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let votes = all[..3].iter().filter(|(_, i)| d.label(*i) == 1).count();
        let expected = u8::from(votes * 2 > 3);
        assert_eq!(m.predict(&query).unwrap(), (expected, votes as f64 / 3.0));
    }

    #[test]
    fn ties_prefer_lower_row_id() {
        let d = Dataset::from_rows(&[vec![-1.0], vec![1.0]], vec![1, 0]).unwrap();
        let m = knn_fit(&d, 1).unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap().0, 1);
    }

    #[test]
    fn k_larger_than_n_rejected() {
        assert!(knn_fit(&five(), 6).is_err());
        assert!(knn_fit(&five(), 0).is_err());
    }
}
