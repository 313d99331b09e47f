import os

class Config:
    OUTPUT_FORMAT = os.environ.get('BLACKMODEL_OUTPUT', 'table')
    LOG_LEVEL = os.environ.get('BLACKMODEL_LOG_LEVEL', 'WARNING')
    BASELINE_GPU = os.environ.get('BLACKMODEL_BASELINE', 'H200')
    HOST = os.environ.get('BLACKMODEL_HOST', '127.0.0.1')
    PORT = int(os.environ.get('BLACKMODEL_PORT', 5000))
    OUTPUT_FORMATS = ('table', 'csv', 'json')
