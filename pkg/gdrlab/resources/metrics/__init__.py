from .segmentation import (ari, ari_fg, iou_fg, combined, video_metric, nan_mean, random_rectangles_partition,
                           UNDEFINED, BACKGROUND_ID)
