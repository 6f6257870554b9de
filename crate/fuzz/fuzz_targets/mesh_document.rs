#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(mesh) = frrd::mesh::Mesh::from_json_str(text) {
            // A parsed mesh must survive a round trip.
            let again = frrd::mesh::Mesh::from_json_str(&mesh.to_json_string()).expect("round trip");
            assert_eq!(again.elements.len(), mesh.elements.len());
        }
    }
});
