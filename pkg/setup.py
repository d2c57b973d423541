import os
import re
from setuptools import setup

with open(os.path.join('seplab', '__init__.py')) as fd:
    regex = re.compile(r'^__version__ = "([\d\.]+)"$')
    for line in fd:
        match = regex.match(line)
        if match:
            module_version = match.group(1)
            break

setup(
    name='seplab',
    version=module_version,
    description='Numerical certificates for depth and feature-learning separation of '
    'neural-network discriminators.',
    long_description=open('README.rst').read(),
    long_description_content_type='text/x-rst',
    keywords='integral probability metric, depth separation, path norm, random features, '
    'maximum mean discrepancy',
    packages=['seplab'],
    install_requires=['pycos >= 4.11.0', 'numpy >= 1.17', 'scipy >= 1.4'],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['seplab = seplab.cli:main']},
    python_requires='>=3.7',
    license='Apache 2.0',
    platforms='any',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        ]
    )
