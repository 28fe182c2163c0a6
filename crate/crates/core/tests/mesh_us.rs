//! Mesh sizing against the reference discretization: half-degree cell
//! centers over a continental-US-shaped domain should yield roughly
//! 3967 fine-mesh and 743 coarse-mesh vertices (±15%) under the default
//! mesh settings.

use firecast::config::RunConfig;
use firecast::geometry::{build_mesh_with, project_lonlat, Point};

/// Coarse outline of the continental United States (lon, lat).
const OUTLINE: &[(f64, f64)] = &[
    (-124.7, 48.4),
    (-124.2, 41.8),
    (-120.6, 34.6),
    (-117.2, 32.6),
    (-114.8, 32.5),
    (-111.0, 31.3),
    (-108.2, 31.3),
    (-106.5, 31.8),
    (-104.9, 29.6),
    (-103.2, 28.9),
    (-101.4, 29.8),
    (-99.2, 26.4),
    (-97.1, 25.9),
    (-97.0, 27.9),
    (-93.8, 29.7),
    (-90.1, 29.2),
    (-89.0, 30.2),
    (-85.0, 29.7),
    (-84.0, 30.1),
    (-82.6, 27.9),
    (-80.3, 25.1),
    (-80.0, 26.8),
    (-81.2, 29.5),
    (-81.4, 30.8),
    (-79.0, 33.2),
    (-75.5, 35.2),
    (-75.9, 36.9),
    (-74.0, 40.5),
    (-70.0, 41.7),
    (-70.8, 43.1),
    (-67.0, 44.8),
    (-67.8, 47.1),
    (-69.2, 47.5),
    (-71.5, 45.0),
    (-76.8, 43.6),
    (-79.2, 43.4),
    (-82.5, 45.3),
    (-84.8, 46.5),
    (-88.4, 48.3),
    (-95.2, 49.0),
    (-123.3, 49.0),
];

fn inside(lon: f64, lat: f64) -> bool {
    // ray casting over the outline polygon
    let mut crossings = 0;
    let n = OUTLINE.len();
    for i in 0..n {
        let (x1, y1) = OUTLINE[i];
        let (x2, y2) = OUTLINE[(i + 1) % n];
        if (y1 > lat) != (y2 > lat) {
            let x_cross = x1 + (lat - y1) / (y2 - y1) * (x2 - x1);
            if x_cross > lon {
                crossings += 1;
            }
        }
    }
    crossings % 2 == 1
}

fn us_like_cells() -> Vec<Point> {
    let mut lonlat = Vec::new();
    let mut lat = 25.25;
    while lat < 49.3 {
        let mut lon = -124.75;
        while lon < -66.9 {
            if inside(lon, lat) {
                lonlat.push((lon, lat));
            }
            lon += 0.5;
        }
        lat += 0.5;
    }
    let ref_lat = lonlat.iter().map(|&(_, la)| la).sum::<f64>() / lonlat.len() as f64;
    lonlat
        .iter()
        .map(|&(lo, la)| project_lonlat(lo, la, ref_lat).unwrap())
        .collect()
}

#[test]
fn default_settings_reproduce_reference_mesh_sizes() {
    let cells = us_like_cells();
    assert!(
        (3000..=4000).contains(&cells.len()),
        "synthetic grid has {} cells; the outline needs adjusting",
        cells.len()
    );
    let config = RunConfig::default();
    let fine = build_mesh_with(&cells, &config.mesh_fine).unwrap();
    let coarse = build_mesh_with(&cells, &config.mesh_coarse).unwrap();
    println!(
        "cells: {}, fine vertices: {}, coarse vertices: {}",
        cells.len(),
        fine.n_vertices(),
        coarse.n_vertices()
    );
    // ±15% of the reference node counts 3967 and 743
    assert!(
        (3372..=4562).contains(&fine.n_vertices()),
        "fine mesh has {} vertices, want 3967 ± 15%",
        fine.n_vertices()
    );
    assert!(
        (631..=854).contains(&coarse.n_vertices()),
        "coarse mesh has {} vertices, want 743 ± 15%",
        coarse.n_vertices()
    );
    // both meshes must cover every cell
    assert!(firecast::geometry::projector(&fine, &cells).is_ok());
    assert!(firecast::geometry::projector(&coarse, &cells).is_ok());
}

