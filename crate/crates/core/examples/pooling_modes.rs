//! Aggregates hand-made detections with each pooling mode.

use partcap::aggregate::{aggregate, select_parts, AggregationConfig, PoolingMode};
use partcap::bbox::BBox;
use partcap::detector::Detection;

fn det(view: usize, class: usize, conf: f64, feature: Vec<f64>) -> Detection {
    let mut probs = vec![(1.0 - conf) / 2.0; 3];
    probs[class] = conf;
    Detection {
        view_index: view,
        bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
        probs,
        feature,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dets = vec![
        det(0, 0, 0.95, vec![1.0, -1.0]),
        det(0, 0, 0.90, vec![0.0, 2.0]),
        det(1, 0, 0.85, vec![3.0, 0.0]),
        det(1, 1, 0.99, vec![-1.0, -1.0]),
        det(2, 2, 0.60, vec![5.0, 5.0]),
    ];
    let selected = select_parts(&dets, 0.8);
    println!("{} of {} detections pass rho = 0.8", selected.len(), dets.len());
    for mode in [PoolingMode::Max, PoolingMode::Mean, PoolingMode::Mixed, PoolingMode::MaxAll] {
        let cfg = AggregationConfig {
            mode,
            ..AggregationConfig::new(3, 2)
        };
        let f = aggregate(&selected, &cfg)?;
        println!("{mode:<8} present {:?} features {:?}", f.present, f.per_class);
    }
    Ok(())
}
