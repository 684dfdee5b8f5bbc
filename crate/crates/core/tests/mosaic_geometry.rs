use attrib_core::mosaic::{layout_with, render_svg, Legend, LayoutOptions, MosaicTable, ShadingScheme};
use proptest::prelude::*;

fn table(rows: usize, cells: &[u64]) -> MosaicTable {
    let cols = cells.len() / rows;
    MosaicTable::new(
        (0..rows).map(|i| format!("r{i}")).collect(),
        (0..cols).map(|j| format!("c{j}")).collect(),
        cells.chunks(cols).map(<[u64]>::to_vec).collect(),
    )
    .unwrap()
}

fn overlap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    let w = (a.0 + a.2).min(b.0 + b.2) - a.0.max(b.0);
    let h = (a.1 + a.3).min(b.1 + b.3) - a.1.max(b.1);
    if w > 0.0 && h > 0.0 {
        w * h
    } else {
        0.0
    }
}

proptest! {
    #[test]
    fn areas_and_disjointness(
        rows in 2usize..4,
        cells in prop::collection::vec(0u64..50, 12),
        gap in prop_oneof![Just(0.0), Just(0.01)],
    ) {
        let cells = &cells[..rows * (12 / rows)];
        let total: u64 = cells.iter().sum();
        prop_assume!(total > 0);
        let t = table(rows, cells);
        let l = layout_with(&t, LayoutOptions { gap, transpose: false }).unwrap();
        for tile in &l.tiles {
            prop_assert!(tile.x >= -1e-12 && tile.y >= -1e-12);
            prop_assert!(tile.x + tile.w <= 1.0 + 1e-9 && tile.y + tile.h <= 1.0 + 1e-9);
            if gap == 0.0 {
                let want = t.counts[tile.cell.0][tile.cell.1] as f64 / total as f64;
                prop_assert!((tile.w * tile.h - want).abs() < 1e-9);
            }
        }
        for (i, a) in l.tiles.iter().enumerate() {
            for b in &l.tiles[i + 1..] {
                prop_assert!(overlap((a.x, a.y, a.w, a.h), (b.x, b.y, b.w, b.h)) < 1e-12);
            }
        }
    }

    #[test]
    fn fill_depends_only_on_cell_residual(
        cells in prop::collection::vec(1u64..30, 6),
        res in prop::collection::vec(-6.0f64..6.0, 6),
    ) {
        let t = table(2, &cells);
        let r: Vec<Vec<f64>> = res.chunks(3).map(<[f64]>::to_vec).collect();
        let mut l = layout_with(&t, LayoutOptions::default()).unwrap();
        let scheme = ShadingScheme::default();
        let svg = render_svg(&l, Some(&r), &scheme, &Legend::default()).unwrap();
        l.tiles.reverse();
        let rev = render_svg(&l, Some(&r), &scheme, &Legend::default()).unwrap();
        let fills = |s: &str| {
            let mut v: Vec<String> = s.lines().filter(|l| l.contains("<title>r")).map(str::to_string).collect();
            v.sort();
            v
        };
        prop_assert_eq!(fills(&svg), fills(&rev));
    }
}
