from .visualization import (IndexVisualization, hsv_index_map, attribute_swap, smooth_curve, utilization_curve,
                            plot_curves, save_image)
from .alignment import AlignmentReport, modal_indexes, attribute_alignment, shuffled_control, downsample_masks
