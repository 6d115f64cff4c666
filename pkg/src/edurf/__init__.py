"""EDU segmentation with a random forest over region-marked lexical features."""
