// Every example must run to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            #![allow(dead_code)]
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                run_example();
            }
        }
    };
}

example!(lattice_geometry);
example!(exact_distribution);
example!(closed_form);
example!(generating_function);
example!(central_limit);
example!(scaled_process);
example!(large_deviations);
example!(moderate_deviations);
example!(rate_surface);
example!(validation);
