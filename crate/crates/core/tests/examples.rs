macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run_example().expect(concat!(stringify!($name), " example should run"));
        }
    };
}

example!(cyclic_loop);
example!(adiabatic_comparison);
example!(s_operation);
example!(conditional_phase);
example!(single_qubit_gates);
example!(cnot);
example!(profiled_loop);
example!(sequence_json);
