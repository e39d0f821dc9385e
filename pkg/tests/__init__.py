from . import (test_buffers, test_cli, test_coefficients, test_config, test_decorator,
               test_encoder, test_errors, test_flops, test_formatter, test_geometry,
               test_harness, test_integrate_ref, test_kernels, test_logger, test_planner,
               test_printable, test_reference_element, test_verification)
