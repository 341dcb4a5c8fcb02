/// The bundled highway scenarios, by file stem.
pub const FIXTURES: [(&str, &str); 5] = [
    ("highway_ex3", include_str!("../../fixtures/highway_ex3.cfl")),
    ("highway_ex4", include_str!("../../fixtures/highway_ex4.cfl")),
    ("highway_ex5", include_str!("../../fixtures/highway_ex5.cfl")),
    ("highway_ex6", include_str!("../../fixtures/highway_ex6.cfl")),
    ("highway_ex7", include_str!("../../fixtures/highway_ex7.cfl")),
];

/// Text of a bundled scenario; the `.cfl` suffix is optional.
pub fn fixture(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".cfl").unwrap_or(name);
    FIXTURES.iter().find(|(n, _)| *n == stem).map(|(_, t)| *t)
}
