#pragma once

#define CSYN_VERSION "0.1.0"
