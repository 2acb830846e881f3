//! Expanding-window cross-validated grid search over boosted-tree
//! settings.

use std::collections::BTreeMap;

use loadcast::eval::{expanding_folds, grid_search, MetricId};
use loadcast::family::Family;
use loadcast::synth::{generate_synthetic, SynthConfig};
use loadcast::Column;

fn main() -> loadcast::Result<()> {
    let ds = generate_synthetic(&SynthConfig::default())?;
    let load = ds.series(Column::Load).slice(0..500)?;
    let plan = expanding_folds(load.len(), 3, 320)?;
    for (i, f) in plan.folds.iter().enumerate() {
        println!("fold {i}: train {:?}, validate {:?}", f.train, f.validate);
    }
    let grid = BTreeMap::from([
        ("learning_rate".to_string(), vec![0.05, 0.2]),
        ("max_depth".to_string(), vec![2.0, 3.0]),
        ("n_trees".to_string(), vec![50.0]),
        ("window".to_string(), vec![14.0]),
    ]);
    let result = grid_search(Family::Gbt, &grid, &load, None, &plan, MetricId::Rmse)?;
    for e in &result.entries {
        println!("{:?} -> mean RMSE {:.2}", e.params, e.mean);
    }
    println!("best: {:?}", result.best_entry().params);
    Ok(())
}
