from . import (buffers, coefficients, config, decorator, encoder, errors, flops, formatter,
               geometry, harness, integrate_ref, kernels, logger, planner, printable,
               reference_element, triangle_rules, verification)
