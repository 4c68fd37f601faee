use crate::dataset::SequenceDataset;
use crate::model::RankingModel;
use crate::scalar::Scalar;

/// Ranks items by how often they occur in the training data.
#[derive(Debug, Clone, PartialEq)]
pub struct PopRec<T> {
    num_users: usize,
    counts: Vec<T>,
}

impl<T: Scalar> PopRec<T> {
    /// Counts item occurrences in the training prefixes only.
    pub fn fit(ds: &SequenceDataset) -> Self {
        Self {
            num_users: ds.num_users(),
            counts: ds.training_item_counts().into_iter().map(|c| T::of(c as f64)).collect(),
        }
    }

    pub fn from_counts(num_users: usize, counts: Vec<T>) -> Self {
        Self { num_users, counts }
    }

    pub fn counts(&self) -> &[T] {
        &self.counts
    }
}

impl<T: Scalar> RankingModel<T> for PopRec<T> {
    fn num_users(&self) -> usize {
        self.num_users
    }

    fn num_items(&self) -> usize {
        self.counts.len()
    }

    fn score(&self, _user: usize, _prev: usize, item: usize) -> T {
        self.counts[item]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_training_occurrences_only() {
        let ds = SequenceDataset::from_sequences(4, vec![vec![0, 0, 1, 2, 3], vec![0, 1, 3]]).unwrap();
        let ds = crate::dataset::split_leave_one_out(ds).dataset;
        let pop = PopRec::<f64>::fit(&ds);
        // training prefixes: [0, 0, 1] and [0]
        assert_eq!(pop.counts(), &[3.0, 1.0, 0.0, 0.0]);
        assert_eq!(pop.score(1, 2, 0), 3.0);
        assert_eq!(pop.score(0, 0, 3), 0.0);
    }

    #[test]
    fn independent_of_user_and_previous_item() {
        let pop = PopRec::from_counts(3, vec![7.0f64, 2.0]);
        assert_eq!(pop.score(0, 0, 0), 7.0);
        assert_eq!(pop.score(2, 1, 0), 7.0);
    }
}
