"""Non-neural toolkit for deep sketch-based modeling experiments.

Submodules:

* ``geometry_io``  - OBJ loading, surface sampling, normalization, alignment
* ``metrics3d``    - Chamfer distance, EMD, F-score
* ``assignment``   - exact linear assignment solver used by EMD
* ``sketch_svg``   - SVG strokes, stochastic stylization, rasterization
* ``viewpoints``   - camera viewpoint sampling
* ``embedloss``    - shape-distance / embedding regression loss
* ``maskkit``      - sparse label sampling, mask metrics, label propagation
* ``cli``          - command line entry point
"""

__version__ = "0.1.0"
