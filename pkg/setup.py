# SPDX-License-Identifier: Apache-2.0

# Copyright 2026 Contributors to zaniwave

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


from setuptools import setup

with open('README.md', 'r') as fh:
    long_description = fh.read()

setup(name='zaniwave',
      version='0.1.0',
      description='Nested zero-and-N-inflated binomial wavelet models for multi-category count time series',
      long_description=long_description,
      long_description_content_type='text/markdown',
      packages=['zaniwave'],
      package_data={'zaniwave': ['templates/*.txt']},
      python_requires='>=3.8.0',
      include_package_data=True,
      install_requires=['numpy>=1.20', 'scipy>=1.8', 'PyWavelets', 'pandas', 'jinja2'],
      entry_points={'console_scripts': ['zaniwave = zaniwave.cli:main']})
