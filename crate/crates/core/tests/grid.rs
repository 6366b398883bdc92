use vdd_core::decoding::{DecodingConfig, Strategy};
use vdd_core::sweep::{enumerate_configs, Group, DEFAULT_CONFIG_INDEX, GRID_SIZE};

const GOLDEN: &str = include_str!("data/grid.golden.jsonl");

#[test]
fn grid_matches_golden_file() {
    let grid = enumerate_configs(&DecodingConfig::default());
    assert_eq!(grid.to_golden(), GOLDEN);
    assert_eq!(grid.len(), GRID_SIZE);
}

#[test]
fn group_sizes_and_order() {
    let grid = enumerate_configs(&DecodingConfig::default());
    assert_eq!(grid.temperature_configs().len(), 20);
    assert_eq!(grid.top_k_configs().len(), 9);
    assert_eq!(grid.top_p_configs().len(), 20);
    let groups: Vec<Group> = grid.points.iter().map(|p| p.group).collect();
    assert!(groups[..20].iter().all(|g| *g == Group::Temp));
    assert!(groups[20..29].iter().all(|g| *g == Group::TopK));
    assert!(groups[29..].iter().all(|g| *g == Group::TopP));
    assert_eq!(grid.points[19].strategy(), Strategy::Temperature { tau: 1.0 });
    assert_eq!(grid.points[48].strategy(), Strategy::TopP { p: 1.0 });
}

#[test]
fn default_is_greedy_outside_the_grid() {
    let grid = enumerate_configs(&DecodingConfig::default());
    assert_eq!(grid.default_config().strategy, Strategy::Greedy);
    assert_eq!(DEFAULT_CONFIG_INDEX, GRID_SIZE);
}
