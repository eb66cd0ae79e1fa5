"""
Data package initialization.
"""
from data.csv_io import load_csv, save_csv
from data.dataset import Dataset, batches, split
from data.generators import gen_gaussians, gen_spirals, spiral_point

__all__ = ['Dataset', 'batches', 'gen_gaussians', 'gen_spirals', 'load_csv', 'save_csv', 'spiral_point', 'split']
