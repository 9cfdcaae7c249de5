//! On-disk round trips for every file format: values written through the
//! public writers come back bit-identical (or within the documented f32
//! storage width) through the readers.

use hawp_core::binding::{bind, Proposal};
use hawp_core::geometry::{Homography, Junction, LineSegment, Point2, Wireframe};
use hawp_core::hatfield::encode_field;
use hawp_core::io;
use hawp_core::junctions::gt_junction_maps;
use hawp_core::loi::{Activation, MlpLayer, MlpWeights};
use hawp_core::ssl::EdgeMap;
use hawp_core::synth::{generate_dataset_filtered, Primitive};
use tempfile::tempdir;

fn sample_wireframe() -> Wireframe {
    let mut wf = Wireframe::new(64, 48);
    wf.segments = vec![
        LineSegment::with_score(Point2::new(4.0, 4.0), Point2::new(40.0, 4.0), 0.875),
        LineSegment::with_score(Point2::new(40.0, 4.0), Point2::new(40.0, 44.0), 1.0),
        LineSegment::with_score(Point2::new(4.0, 4.0), Point2::new(40.0, 44.0), 0.25),
    ];
    wf.junctions = vec![
        Junction::new(Point2::new(4.0, 4.0), 1.0),
        Junction::new(Point2::new(40.0, 4.0), 0.5),
        Junction::new(Point2::new(40.0, 44.0), 0.75),
    ];
    wf
}

#[test]
fn wireframe_json_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("wf.json");
    let wf = sample_wireframe();
    io::write_wireframe(&path, &wf).unwrap();
    let back = io::read_wireframe(&path).unwrap();
    assert_eq!(back.width, wf.width);
    assert_eq!(back.height, wf.height);
    assert_eq!(back.segments, wf.segments);
    assert_eq!(back.junctions, wf.junctions);
}

#[test]
fn wireframe_writes_are_byte_stable() {
    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let wf = sample_wireframe();
    io::write_wireframe(&a, &wf).unwrap();
    io::write_wireframe(&b, &wf).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn wireframe_dir_reads_in_name_order() {
    let dir = tempdir().unwrap();
    let wf = sample_wireframe();
    for name in ["c.json", "a.json", "b.json"] {
        io::write_wireframe(&dir.path().join(name), &wf).unwrap();
    }
    let entries = io::read_wireframe_dir(dir.path()).unwrap();
    let names: Vec<&str> = entries.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["a", "b", "c"]);
}

#[test]
fn homography_json_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("h.json");
    let h = Homography::from_matrix([
        [1.25, -0.5, 3.0],
        [0.125, 0.75, -2.0],
        [1e-3, -2e-3, 1.0],
    ])
    .unwrap();
    io::write_homography(&path, &h).unwrap();
    assert_eq!(io::read_homography(&path).unwrap().m, h.m);
}

#[test]
fn proposals_json_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("props.json");
    let wf = sample_wireframe();
    let props = bind(&wf.segments, &wf.junctions, 10.0, 4.0).unwrap();
    assert!(!props.is_empty());
    io::write_proposals(&path, &props, 4.0).unwrap();
    let (back, units) = io::read_proposals(&path).unwrap();
    assert_eq!(units, 4.0);
    let fields = |p: &Proposal| (p.y1, p.y2, p.x1, p.x2, p.delta, p.score);
    assert_eq!(back.len(), props.len());
    for (b, p) in back.iter().zip(&props) {
        assert_eq!(fields(b), fields(p));
    }
}

#[test]
fn mlp_weights_round_trip_exactly() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("mlp.json");
    let weights = MlpWeights {
        layers: vec![
            MlpLayer {
                w: vec![vec![0.5, -1.25], vec![2.0, 0.0]],
                b: vec![0.125, -0.5],
                act: Activation::Relu,
            },
            MlpLayer {
                w: vec![vec![1.0, 1.0]],
                b: vec![0.0],
                act: Activation::None,
            },
        ],
    };
    io::write_mlp_weights(&path, &weights).unwrap();
    assert_eq!(io::read_mlp_weights(&path).unwrap(), weights);
}

#[test]
fn hat_field_binary_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("field.hatf");
    let field = encode_field(&sample_wireframe(), 4, 5.0, 0.05).unwrap();
    io::write_hat_field(&path, &field).unwrap();
    let back = io::read_hat_field(&path).unwrap();
    assert_eq!(back.width_s, field.width_s);
    assert_eq!(back.height_s, field.height_s);
    assert_eq!(back.stride, field.stride);
    assert_eq!(back.tau_d, field.tau_d);
    // f32 planes are stored verbatim; equality must be bitwise.
    assert_eq!(back.d, field.d);
    assert_eq!(back.delta_d, field.delta_d);
    assert_eq!(back.theta, field.theta);
    assert_eq!(back.theta1, field.theta1);
    assert_eq!(back.theta2, field.theta2);
    assert_eq!(back.mask, field.mask);
}

#[test]
fn junction_maps_binary_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("maps.junc");
    let maps = gt_junction_maps(&sample_wireframe(), 4);
    io::write_junction_maps(&path, &maps).unwrap();
    let back = io::read_junction_maps(&path).unwrap();
    assert_eq!(back.width, maps.width);
    assert_eq!(back.height, maps.height);
    assert_eq!(back.stride, maps.stride);
    assert_eq!(back.heatmap, maps.heatmap);
    assert_eq!(back.offset_x, maps.offset_x);
    assert_eq!(back.offset_y, maps.offset_y);
}

#[test]
fn edge_map_binary_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("map.edge");
    let map = EdgeMap::from_segments(&sample_wireframe().segments, 64, 48);
    io::write_edge_map(&path, &map).unwrap();
    let back = io::read_edge_map(&path).unwrap();
    assert_eq!(back.width, map.width);
    assert_eq!(back.height, map.height);
    assert_eq!(back.grid, map.grid);
}

#[test]
fn pgm_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("img.pgm");
    let pixels: Vec<u8> = (0..64u32 * 48).map(|i| (i % 251) as u8).collect();
    io::write_pgm(&path, 64, 48, &pixels).unwrap();
    let (w, h, back) = io::read_pgm(&path).unwrap();
    assert_eq!((w, h), (64, 48));
    assert_eq!(back, pixels);
}

#[test]
fn edge_map_reader_accepts_pgm() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("map.pgm");
    let pixels = vec![0u8, 51, 102, 153, 204, 255];
    io::write_pgm(&path, 3, 2, &pixels).unwrap();
    let map = io::read_edge_map(&path).unwrap();
    assert_eq!((map.width, map.height), (3, 2));
    for (got, &raw) in map.grid.iter().zip(&pixels) {
        assert!((*got - raw as f32 / 255.0).abs() < 1e-6);
    }
}

#[test]
fn generated_dataset_is_fully_readable() {
    let dir = tempdir().unwrap();
    let manifest =
        generate_dataset_filtered(dir.path(), &[Primitive::Polygon, Primitive::Lines], 2, 9, (64, 64))
            .unwrap();
    assert_eq!(manifest.samples.len(), 4);
    let back = io::read_manifest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(back, manifest);
    for entry in &back.samples {
        let (w, h, px) = io::read_pgm(&dir.path().join(&entry.image)).unwrap();
        assert_eq!((w, h), (64, 64));
        assert_eq!(px.len(), 64 * 64);
        let wf = io::read_wireframe(&dir.path().join(&entry.wireframe)).unwrap();
        assert_eq!((wf.width, wf.height), (64, 64));
        assert!(!wf.segments.is_empty());
    }
}
