//! Worked examples on the built-in families, stars and file formats.

use nalgebra::{DMatrix, DVector};
use perigid::cones::{analyze_star, refute_expansive_at_vertex, vertex_star, VectorStar};
use perigid::constructions::{
    remove_edge_orbit, simplex_framework, stressed_framework, with_edge_orbit, SimplexVariant,
    GREEN, RED,
};
use perigid::expansive::{effective_vertices, orient_expansive, verify_pointedness_theorem};
use perigid::io::{
    framework_from_json, framework_to_json, load_framework, save_framework, to_json_string,
};
use perigid::rigidity::{analyze, is_minimally_rigid, stress_coefficients, DEFAULT_RANK_TOL};
use perigid::Error;

const TOL: f64 = DEFAULT_RANK_TOL;

fn star(vs: &[&[f64]]) -> VectorStar {
    VectorStar::new("o", vs.iter().map(|v| DVector::from_row_slice(v)).collect()).unwrap()
}

#[test]
fn family_edge_counts_and_dimensions() {
    let base = simplex_framework(3, SimplexVariant::Base, false).unwrap();
    assert_eq!((base.num_orbits(), base.num_edges()), (2, 6));
    let enhanced = simplex_framework(3, SimplexVariant::Enhanced, false).unwrap();
    assert_eq!(enhanced.num_edges(), 9);
    assert!(is_minimally_rigid(&enhanced, TOL).unwrap());
    assert_eq!(
        analyze(
            &simplex_framework(2, SimplexVariant::Base, false).unwrap(),
            TOL
        )
        .unwrap()
        .dof,
        2
    );
}

#[test]
fn placements_agree_on_dimensions() {
    for d in 2..=5 {
        let mut variants = vec![SimplexVariant::Base, SimplexVariant::Enhanced];
        variants.extend((1..=d).map(SimplexVariant::Removed));
        for v in variants {
            let a = analyze(&simplex_framework(d, v, false).unwrap(), TOL).unwrap();
            let b = analyze(&simplex_framework(d, v, true).unwrap(), TOL).unwrap();
            assert_eq!(
                (a.rank, a.dof, a.stress_dim()),
                (b.rank, b.dof, b.stress_dim()),
                "d={d} {v}"
            );
            let expected = match v {
                SimplexVariant::Base => d,
                SimplexVariant::Enhanced => 0,
                SimplexVariant::Removed(_) => 1,
            };
            assert_eq!(a.dof, expected);
        }
    }
}

#[test]
fn removed_variants_are_related_by_swapping_generators() {
    // Swapping λ1 and λ2 (coordinates and lattice columns) maps the
    // mechanism without 2λ1 onto the one without 2λ2.
    let d = 3;
    let a = simplex_framework(d, SimplexVariant::Removed(1), false).unwrap();
    let b = simplex_framework(d, SimplexVariant::Removed(2), false).unwrap();
    let fa = &analyze(&a, TOL).unwrap().flex_basis[0];
    let fb = &analyze(&b, TOL).unwrap().flex_basis[0];
    let swap = |i: usize| match i {
        0 => 1,
        1 => 0,
        x => x,
    };
    let n = a.num_orbits();
    let mut mapped = DVector::zeros(fa.len());
    for o in 0..n {
        for r in 0..d {
            mapped[d * o + swap(r)] = fa[d * o + r];
        }
    }
    for c in 0..d {
        for r in 0..d {
            mapped[d * n + d * swap(c) + swap(r)] = fa[d * n + d * c + r];
        }
    }
    let c = mapped.dot(fb).abs() / (mapped.norm() * fb.norm());
    assert!((c - 1.0).abs() < 1e-12);
}

#[test]
fn stress_normalization_errors() {
    let fw = simplex_framework(3, SimplexVariant::Enhanced, false).unwrap();
    let rep = analyze(&fw, TOL).unwrap();
    assert!(matches!(
        stress_coefficients(&fw, &rep, 0, -1.0),
        Err(Error::NoStress)
    ));
    let fw = stressed_framework();
    let rep = analyze(&fw, TOL).unwrap();
    assert!(matches!(
        stress_coefficients(&fw, &rep, 8, -1.0),
        Err(Error::IndexOutOfRange { .. })
    ));
    let two = with_edge_orbit(
        &with_edge_orbit(&fw, GREEN, GREEN, &[1, 0, 0]).unwrap(),
        GREEN,
        GREEN,
        &[0, 1, 0],
    )
    .unwrap();
    let rep2 = analyze(&two, TOL).unwrap();
    if rep2.stress_dim() > 1 {
        assert!(matches!(
            stress_coefficients(&two, &rep2, 0, -1.0),
            Err(Error::NonUniqueStress(_))
        ));
    }
}

#[test]
fn stressed_stars() {
    let fw = stressed_framework();
    let green = vertex_star(&fw, GREEN).unwrap();
    assert_eq!(green.len(), 8);
    let g = analyze_star(&green, 3, TOL).unwrap();
    assert_eq!(g.lineality_dim(), 0);
    assert!(g.pointed_codim2 && g.positive_dependence.is_none());
    let normal = g.separating_normal.clone().unwrap();
    assert!(green.vectors.iter().all(|v| v.dot(&normal) > 0.0));
    let json = g.to_json_value();
    for key in [
        "orbit",
        "lineality_dim",
        "pointed_codim2",
        "separating_normal",
        "positive_dependence",
    ] {
        assert!(json.get(key).is_some(), "{key}");
    }
    let red = vertex_star(&fw, RED).unwrap();
    assert_eq!(red.len(), 8);
    assert!(matches!(
        vertex_star(&fw, "blue"),
        Err(Error::UnknownOrbit(_))
    ));
}

#[test]
fn planar_mechanism_stars_are_pointed() {
    for k in 1..=2 {
        let fw = simplex_framework(2, SimplexVariant::Removed(k), false).unwrap();
        for orbit in [RED, GREEN] {
            let a = analyze_star(&vertex_star(&fw, orbit).unwrap(), 2, TOL).unwrap();
            assert_eq!(a.lineality_dim(), 0, "removed:{k} {orbit}");
        }
        let flex = orient_expansive(&fw, &analyze(&fw, TOL).unwrap().flex_basis[0], 2, TOL)
            .unwrap()
            .unwrap();
        assert_eq!(
            effective_vertices(&fw, &flex, 2, TOL).unwrap(),
            vec![RED.to_string(), GREEN.to_string()]
        );
        assert!(
            verify_pointedness_theorem(&fw, &flex, 2, TOL)
                .unwrap()
                .passed
        );
    }
}

#[test]
fn refutation_examples() {
    assert!(refute_expansive_at_vertex(&star(&[&[1.0, 0.0], &[-1.0, 0.0]]), TOL).unwrap());
    assert!(!refute_expansive_at_vertex(&star(&[&[1.0, 0.0], &[0.0, 1.0]]), TOL).unwrap());
    let simplex = star(&[
        &[1.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0],
        &[0.0, 0.0, 1.0],
        &[-1.0, -1.0, -1.0],
    ]);
    assert!(refute_expansive_at_vertex(&simplex, TOL).unwrap());
    let a = analyze_star(&simplex, 3, TOL).unwrap();
    assert_eq!(a.lineality_dim(), 3);
    assert!(!a.pointed_codim2 && a.separating_normal.is_none());
    // Linear part of dimension d − 1 still has a normal vanishing on it.
    let flat = star(&[
        &[1.0, 0.0, 0.0],
        &[-1.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0],
        &[0.0, -1.0, 0.0],
        &[0.0, 0.0, 1.0],
    ]);
    let f = analyze_star(&flat, 3, TOL).unwrap();
    assert_eq!(f.lineality_dim(), 2);
    assert!(!f.pointed_codim2);
    let n = f.separating_normal.unwrap();
    assert!(n[0].abs() < 1e-12 && n[1].abs() < 1e-12 && n[2] > 0.0);
}

#[test]
fn surgery_round_trip() {
    let fw = simplex_framework(2, SimplexVariant::Enhanced, false).unwrap();
    let k = fw
        .graph()
        .edge_orbits
        .iter()
        .position(|e| e.shift == vec![2, 0])
        .unwrap();
    let mech = remove_edge_orbit(&fw, k).unwrap();
    assert_eq!(analyze(&mech, TOL).unwrap().dof, 1);
    assert_eq!(
        mech,
        simplex_framework(2, SimplexVariant::Removed(1), false).unwrap()
    );
    let braced = with_edge_orbit(&stressed_framework(), RED, RED, &[1, 0, 0]).unwrap();
    assert_eq!(analyze(&braced, TOL).unwrap().dof, 1);
}

#[test]
fn json_schema_and_files() {
    let fw = stressed_framework();
    let text = framework_to_json(&fw);
    let keys: Vec<usize> = [
        "\"dimension\"",
        "\"vertex_orbits\"",
        "\"lattice\"",
        "\"edge_orbits\"",
    ]
    .iter()
    .map(|k| text.find(k).unwrap())
    .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
    assert!(text.contains("\"position\": [0.5, 0.5, -0.5]"));
    assert_eq!(framework_from_json(&text).unwrap(), fw);

    let extra = text.replacen("\"dimension\"", "\"colour\": 1, \"dimension\"", 1);
    assert!(matches!(framework_from_json(&extra), Err(Error::Json(_))));
    let singular = text.replacen("[1.0, 0.0, 0.0]", "[0.0, 1.0, 0.0]", 1);
    assert!(matches!(
        framework_from_json(&singular),
        Err(Error::SingularLattice { .. })
    ));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fw.json");
    save_framework(&fw, &path).unwrap();
    assert_eq!(load_framework(&path).unwrap(), fw);
    assert!(matches!(
        load_framework(dir.path().join("missing.json")),
        Err(Error::Io(_))
    ));

    let report = analyze(&fw, TOL).unwrap().to_json_value();
    let rendered = to_json_string(&report);
    for key in [
        "rank",
        "dof",
        "stress_dim",
        "flex_basis",
        "stress_basis",
        "tolerance",
    ] {
        assert!(rendered.contains(&format!("\"{key}\"")));
    }
    assert_eq!(report["dof"], 2);
    let lattice = DMatrix::<f64>::identity(3, 3);
    assert_eq!(fw.placement().lattice, lattice);
}
