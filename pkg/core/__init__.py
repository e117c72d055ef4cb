# Core: settings, exceptions, response envelopes, logging
